//! Requirement → two CSV quotations → vendor choice → four sign-offs →
//! vendor acknowledgement → LOP closure, which lands as Strategy evidence.

use itil_forge::procurement::{parse_quotation_csv, write_quotation_csv};
use itil_forge::{Command, Ctx, Engine};
use serde_json::{json, Value};

fn run(engine: &mut Engine, at: &str, cmd: Value) -> itil_forge::Result<Value> {
    let cmd: Command = serde_json::from_value(cmd).expect("well-formed command");
    let ctx = Ctx::new("procurement-desk", at.parse().unwrap());
    Ok(engine.execute(&cmd, &ctx)?.response)
}

const SHEET: &str = "Sl.,Device,Device Type,Manufacturer,Propose,Warranty,Vendor,Authorized or not,Vendor contact no,Location,Quantity,Price (in RS),Quotation person
1,ThinkPad T460,Laptops,Lenovo,Engineering staff,36 months,VENDOR,yes,+91-80-5550100,HQ,10,PRICE,R. Iyer
2,USB dock,Laptops,Lenovo,Engineering staff,12 months,VENDOR,yes,+91-80-5550100,HQ,10,\"4,500\",R. Iyer
";

fn main() -> itil_forge::Result<()> {
    let mut e = Engine::default();
    let t = "2016-01-04T09:00:00Z";
    for (name, contact) in [("Acme Systems", "+91-80-5550100"), ("Beta Traders", "+91-80-5550200")] {
        run(&mut e, t, json!({ "type": "register_vendor", "name": name, "contact": contact,
                               "categories": { "Laptops": true } }))?;
    }
    run(&mut e, t, json!({ "type": "create_project", "name": "Laptop refresh", "organization": "Acme Textiles" }))?;
    run(&mut e, t, json!({ "type": "submit_requirement", "project_id": "prj000001", "requirement_doc": "REQ-2016-01" }))?;

    for (vendor, price) in [("ven000001", "\"62,000\""), ("ven000002", "59500.50")] {
        let csv = SHEET.replace("VENDOR", vendor).replace("PRICE", price);
        let lines = parse_quotation_csv(&csv, "INR")?;
        run(&mut e, t, json!({ "type": "attach_quotation", "procurement_id": "prc000001",
                               "vendor_id": vendor, "lines": lines }))?;
    }
    let req = e.procurement().request(&"prc000001".into())?;
    let lowest = req.lowest_quotation()?.expect("two quotations");
    println!("lowest quote: {} ({} minor units)", lowest.vendor_id, lowest.total()?);
    print!("{}", write_quotation_csv(&lowest.lines));
    let winner = lowest.vendor_id.clone();

    run(&mut e, t, json!({ "type": "select_vendor", "procurement_id": "prc000001", "vendor_id": winner,
                           "justification": "lowest price, authorized dealer" }))?;
    for (role, name) in [("IT", "S. Rao"), ("ProjectManagement", "M. Das"), ("Operations", "K. Pillai"), ("FinanceHead", "A. Shah")] {
        let r = run(&mut e, "2016-01-06T10:00:00Z", json!({
            "type": "record_approval", "procurement_id": "prc000001",
            "decision": { "role": role, "approver_name": name, "date": "2016-01-06", "status": "Approved" } }))?;
        println!("{role:>17} approved -> overall {}", r["overall"]);
    }
    run(&mut e, "2016-01-07T10:00:00Z", json!({ "type": "record_vendor_ack", "procurement_id": "prc000001" }))?;
    run(&mut e, "2016-01-08T10:00:00Z", json!({ "type": "close_lop", "procurement_id": "prc000001" }))?;

    let gate = e.lifecycle().get(&"prj000001".into())?.current_gate().clone();
    println!("Strategy gate still missing: {:?}", gate.missing());
    for n in e.notifier().notifications() {
        println!("notice {} {:?} -> {:?}", n.id, n.kind, n.audience);
    }
    Ok(())
}
