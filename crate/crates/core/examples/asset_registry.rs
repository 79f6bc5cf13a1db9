//! Asset tags and warranty, the license pool, network ports and the
//! server-room power rule.

use chrono::NaiveDate;
use itil_forge::assets::{allocated_load_for, AssetRegistry, Kilowatts, NewAsset, PortKind, PortStatus};
use itil_forge::procurement::DeviceCategory;
use itil_forge::Timestamp;

fn main() -> itil_forge::Result<()> {
    let at: Timestamp = "2016-01-12T09:00:00Z".parse().unwrap();
    let mut reg = AssetRegistry::default();
    for (device, category, months) in [
        ("ThinkPad T460", DeviceCategory::Laptops, 36),
        ("PowerEdge R730", DeviceCategory::Servers, 60),
        ("Cisco 2960", DeviceCategory::NetworkingDevice, 12),
    ] {
        let a = reg.register_asset(NewAsset {
            device: device.into(),
            category,
            vendor_id: "ven000001".into(),
            location: "HQ".into(),
            purchase_date: NaiveDate::from_ymd_opt(2016, 1, 12).unwrap(),
            warranty_months: months,
        })?;
        println!("{} {} warranty until {:?}", a.tag, a.device, a.warranty_expiry());
    }
    let on = NaiveDate::from_ymd_opt(2017, 6, 1).unwrap();
    for a in reg.assets() {
        println!("  on {on}: {} {:?}", a.tag, a.warranty_status(on)?);
    }

    reg.create_license_pool("Office 2016", 2)?;
    reg.allocate_license("Office 2016", "asha", &"AST000001".into(), at)?;
    reg.allocate_license("Office 2016", "ravi", &"AST000001".into(), at)?;
    let full = reg.allocate_license("Office 2016", "meena", &"AST000001".into(), at);
    println!("third seat: {}", full.unwrap_err());
    reg.release_license("Office 2016", "ravi", &"AST000001".into(), at)?;
    let pool = reg.allocate_license("Office 2016", "meena", &"AST000001".into(), at)?;
    println!("pool {}: {} of {} free", pool.product, pool.available(), pool.total);

    reg.register_port("HQ", "GF-01", PortKind::Data, "reception")?;
    reg.mark_port("HQ", "GF-01", PortStatus::Faulty, "no link light", at)?;

    for measured in [3.25, 7.5, 12.0] {
        let alloc = allocated_load_for(Kilowatts(measured))?;
        println!("measured {measured} kW -> allocate {} kW", alloc.0);
    }
    Ok(())
}
