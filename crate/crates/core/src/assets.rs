//! Asset registry: tagged assets with warranty tracking, license pools,
//! versioned server documentation, data/voice ports and power plans.

use std::collections::BTreeMap;
use std::fmt;
use std::net::Ipv4Addr;

use chrono::{Months, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::common::{ActorId, Counter, Timestamp, VendorId};
use crate::error::{require_text, Error, Result};
use crate::procurement::DeviceCategory;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssetTag(pub String);

impl AssetTag {
    pub fn new(value: impl Into<String>) -> Self {
        AssetTag(value.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for AssetTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for AssetTag {
    fn from(value: &str) -> Self {
        AssetTag(value.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssetStatus {
    Active,
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Asset {
    pub tag: AssetTag,
    pub device: String,
    pub category: DeviceCategory,
    pub vendor_id: VendorId,
    pub location: String,
    pub purchase_date: NaiveDate,
    pub warranty_months: u32,
    pub status: AssetStatus,
}

/// Input for [`AssetRegistry::register_asset`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewAsset {
    pub device: String,
    pub category: DeviceCategory,
    pub vendor_id: VendorId,
    pub location: String,
    pub purchase_date: NaiveDate,
    pub warranty_months: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WarrantyStatus {
    InWarranty,
    OutOfWarranty,
}

impl Asset {
    /// Last day (exclusive) of cover: purchase date plus the warranty months,
    /// clamped to month end.
    pub fn warranty_expiry(&self) -> Option<NaiveDate> {
        self.purchase_date
            .checked_add_months(Months::new(self.warranty_months))
    }

    /// Half-open cover `[purchase_date, expiry)`.
    pub fn warranty_status(&self, on: NaiveDate) -> Result<WarrantyStatus> {
        if on < self.purchase_date {
            return Err(Error::validation(
                "on_date",
                format!("{on} is before purchase date {}", self.purchase_date),
            ));
        }
        match self.warranty_expiry() {
            Some(expiry) if on < expiry => Ok(WarrantyStatus::InWarranty),
            Some(_) => Ok(WarrantyStatus::OutOfWarranty),
            // expiry beyond the calendar range
            None => Ok(WarrantyStatus::InWarranty),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseAllocation {
    pub user: String,
    pub asset_tag: AssetTag,
    pub allocated_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LicenseAction {
    Allocated,
    Released,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicenseHistoryEntry {
    pub action: LicenseAction,
    pub user: String,
    pub asset_tag: AssetTag,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicensePool {
    pub product: String,
    pub total: u32,
    pub allocations: Vec<LicenseAllocation>,
    pub history: Vec<LicenseHistoryEntry>,
}

impl LicensePool {
    pub fn new(product: &str, total: u32) -> Result<Self> {
        require_text("product", product)?;
        Ok(LicensePool {
            product: product.to_string(),
            total,
            allocations: Vec::new(),
            history: Vec::new(),
        })
    }

    pub fn available(&self) -> u32 {
        self.total - self.allocations.len() as u32
    }

    fn position(&self, user: &str, asset_tag: &AssetTag) -> Option<usize> {
        self.allocations
            .iter()
            .position(|a| a.user == user && &a.asset_tag == asset_tag)
    }

    pub fn allocate(&mut self, user: &str, asset_tag: &AssetTag, at: Timestamp) -> Result<()> {
        require_text("user", user)?;
        if self.position(user, asset_tag).is_some() {
            return Err(Error::duplicate(
                "license allocation",
                format!("{}/{user}/{asset_tag}", self.product),
            ));
        }
        if self.allocations.len() as u32 >= self.total {
            return Err(Error::PoolExhausted {
                product: self.product.clone(),
                total: self.total,
            });
        }
        self.allocations.push(LicenseAllocation {
            user: user.to_string(),
            asset_tag: asset_tag.clone(),
            allocated_at: at,
        });
        self.history.push(LicenseHistoryEntry {
            action: LicenseAction::Allocated,
            user: user.to_string(),
            asset_tag: asset_tag.clone(),
            at,
        });
        Ok(())
    }

    pub fn release(&mut self, user: &str, asset_tag: &AssetTag, at: Timestamp) -> Result<()> {
        let idx = self.position(user, asset_tag).ok_or_else(|| {
            Error::not_found(
                "license allocation",
                format!("{}/{user}/{asset_tag}", self.product),
            )
        })?;
        self.allocations.remove(idx);
        self.history.push(LicenseHistoryEntry {
            action: LicenseAction::Released,
            user: user.to_string(),
            asset_tag: asset_tag.clone(),
            at,
        });
        Ok(())
    }
}

/// DHCP scope as entered, validated as dotted quads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DhcpRange {
    pub start: String,
    pub end: String,
}

impl DhcpRange {
    pub fn validate(&self) -> Result<()> {
        let parse = |field: &str, text: &str| {
            text.parse::<Ipv4Addr>()
                .map_err(|_| Error::validation(field, format!("{text:?} is not a dotted-quad address")))
        };
        let start = parse("dhcp_range.start", &self.start)?;
        let end = parse("dhcp_range.end", &self.end)?;
        // Ipv4Addr orders octet by octet
        if start > end {
            return Err(Error::validation(
                "dhcp_range",
                format!("start {} is after end {}", self.start, self.end),
            ));
        }
        Ok(())
    }
}

/// Server documentation sheet, items (1)–(8).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerDoc {
    pub name: String,
    pub configuration: String,
    pub operating_system: String,
    pub applications: Vec<String>,
    pub antivirus: String,
    pub policies: Vec<String>,
    pub dhcp_range: Option<DhcpRange>,
    pub print_servers: Vec<String>,
}

impl ServerDoc {
    pub fn validate(&self) -> Result<()> {
        require_text("name", &self.name)?;
        if let Some(range) = &self.dhcp_range {
            range.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServerDocVersion {
    pub version: u32,
    pub doc: ServerDoc,
    pub recorded_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortKind {
    Data,
    Voice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PortStatus {
    #[serde(rename = "OK")]
    Ok,
    Faulty,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortNote {
    pub status: PortStatus,
    pub note: String,
    pub at: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortRecord {
    pub site: String,
    pub port_id: String,
    pub kind: PortKind,
    pub location: String,
    pub status: PortStatus,
    pub notes: Vec<PortNote>,
}

/// Load values in kilowatts.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Kilowatts(pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerPlan {
    pub room: String,
    pub measured_avg_load: Kilowatts,
    pub allocated_load: Kilowatts,
    pub approved: bool,
    pub approved_by: Option<ActorId>,
    pub planned_at: Timestamp,
}

/// Allocation rule for a server room: twice the measured average.
pub fn allocated_load_for(measured_avg_load: Kilowatts) -> Result<Kilowatts> {
    let measured = measured_avg_load.0;
    if !measured.is_finite() || measured <= 0.0 {
        return Err(Error::validation(
            "measured_avg_load",
            format!("must be a positive load, got {measured}"),
        ));
    }
    let allocated = 2.0 * measured;
    if !allocated.is_finite() {
        return Err(Error::validation("measured_avg_load", "load too large"));
    }
    Ok(Kilowatts(allocated))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssetRegistry {
    assets: BTreeMap<AssetTag, Asset>,
    tags: Counter,
    licenses: BTreeMap<String, LicensePool>,
    server_docs: BTreeMap<AssetTag, Vec<ServerDocVersion>>,
    /// Keyed by `site/port_id`.
    ports: BTreeMap<String, PortRecord>,
    power_plans: BTreeMap<String, PowerPlan>,
}

fn port_key(site: &str, port_id: &str) -> String {
    format!("{site}/{port_id}")
}

impl Default for AssetRegistry {
    fn default() -> Self {
        Self {
            assets: BTreeMap::new(),
            tags: Counter::new("AST", 6),
            licenses: BTreeMap::new(),
            server_docs: BTreeMap::new(),
            ports: BTreeMap::new(),
            power_plans: BTreeMap::new(),
        }
    }
}

impl AssetRegistry {
    pub fn asset(&self, tag: &AssetTag) -> Result<&Asset> {
        self.assets.get(tag).ok_or_else(|| Error::not_found("asset", tag))
    }

    pub fn assets(&self) -> impl Iterator<Item = &Asset> {
        self.assets.values()
    }

    pub fn register_asset(&mut self, input: NewAsset) -> Result<&Asset> {
        require_text("device", &input.device)?;
        let warranty_months: u32 = input
            .warranty_months
            .try_into()
            .map_err(|_| Error::validation("warranty_months", "must be between 0 and 2^32-1"))?;
        let tag = AssetTag::new(self.tags.next()?);
        let asset = Asset {
            tag: tag.clone(),
            device: input.device,
            category: input.category,
            vendor_id: input.vendor_id,
            location: input.location,
            purchase_date: input.purchase_date,
            warranty_months,
            status: AssetStatus::Active,
        };
        Ok(self.assets.entry(tag).or_insert(asset))
    }

    pub fn retire_asset(&mut self, tag: &AssetTag) -> Result<&Asset> {
        let asset = self
            .assets
            .get_mut(tag)
            .ok_or_else(|| Error::not_found("asset", tag))?;
        if asset.status == AssetStatus::Retired {
            return Err(Error::invalid_state("asset", tag, "Retired", "retire"));
        }
        asset.status = AssetStatus::Retired;
        Ok(asset)
    }

    pub fn warranty_status(&self, tag: &AssetTag, on: NaiveDate) -> Result<WarrantyStatus> {
        self.asset(tag)?.warranty_status(on)
    }

    pub fn create_license_pool(&mut self, product: &str, total: u32) -> Result<&LicensePool> {
        if self.licenses.contains_key(product) {
            return Err(Error::duplicate("license pool", product));
        }
        let pool = LicensePool::new(product, total)?;
        Ok(self.licenses.entry(product.to_string()).or_insert(pool))
    }

    pub fn license_pool(&self, product: &str) -> Result<&LicensePool> {
        self.licenses
            .get(product)
            .ok_or_else(|| Error::not_found("license pool", product))
    }

    pub fn license_pools(&self) -> impl Iterator<Item = &LicensePool> {
        self.licenses.values()
    }

    pub fn allocate_license(
        &mut self,
        product: &str,
        user: &str,
        asset_tag: &AssetTag,
        at: Timestamp,
    ) -> Result<&LicensePool> {
        self.asset(asset_tag)?;
        let pool = self
            .licenses
            .get_mut(product)
            .ok_or_else(|| Error::not_found("license pool", product))?;
        pool.allocate(user, asset_tag, at)?;
        Ok(pool)
    }

    pub fn release_license(
        &mut self,
        product: &str,
        user: &str,
        asset_tag: &AssetTag,
        at: Timestamp,
    ) -> Result<&LicensePool> {
        let pool = self
            .licenses
            .get_mut(product)
            .ok_or_else(|| Error::not_found("license pool", product))?;
        pool.release(user, asset_tag, at)?;
        Ok(pool)
    }

    pub fn record_server_doc(
        &mut self,
        tag: &AssetTag,
        doc: ServerDoc,
        at: Timestamp,
    ) -> Result<&ServerDocVersion> {
        let asset = self.asset(tag)?;
        if !asset.category.is_server_like() {
            return Err(Error::validation(
                "asset_tag",
                format!("{tag} is a {} asset, not a server", asset.category),
            ));
        }
        doc.validate()?;
        let versions = self.server_docs.entry(tag.clone()).or_default();
        let version = versions.len() as u32 + 1;
        versions.push(ServerDocVersion { version, doc, recorded_at: at });
        Ok(versions.last().expect("just pushed"))
    }

    pub fn server_docs(&self, tag: &AssetTag) -> &[ServerDocVersion] {
        self.server_docs.get(tag).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn register_port(
        &mut self,
        site: &str,
        port_id: &str,
        kind: PortKind,
        location: &str,
    ) -> Result<&PortRecord> {
        require_text("site", site)?;
        require_text("port_id", port_id)?;
        let key = port_key(site, port_id);
        if self.ports.contains_key(&key) {
            return Err(Error::duplicate("port", format!("{site}/{port_id}")));
        }
        let record = PortRecord {
            site: site.to_string(),
            port_id: port_id.to_string(),
            kind,
            location: location.to_string(),
            status: PortStatus::Ok,
            notes: Vec::new(),
        };
        Ok(self.ports.entry(key).or_insert(record))
    }

    pub fn mark_port(
        &mut self,
        site: &str,
        port_id: &str,
        status: PortStatus,
        note: &str,
        at: Timestamp,
    ) -> Result<&PortRecord> {
        let record = self
            .ports
            .get_mut(&port_key(site, port_id))
            .ok_or_else(|| Error::not_found("port", format!("{site}/{port_id}")))?;
        record.status = status;
        record.notes.push(PortNote { status, note: note.to_string(), at });
        Ok(record)
    }

    pub fn port(&self, site: &str, port_id: &str) -> Result<&PortRecord> {
        self.ports
            .get(&port_key(site, port_id))
            .ok_or_else(|| Error::not_found("port", format!("{site}/{port_id}")))
    }

    pub fn ports(&self) -> impl Iterator<Item = &PortRecord> {
        self.ports.values()
    }

    /// Replaces any earlier plan for the room; approval resets.
    pub fn plan_power(
        &mut self,
        room: &str,
        measured_avg_load: Kilowatts,
        at: Timestamp,
    ) -> Result<&PowerPlan> {
        require_text("room", room)?;
        let allocated_load = allocated_load_for(measured_avg_load)?;
        let plan = PowerPlan {
            room: room.to_string(),
            measured_avg_load,
            allocated_load,
            approved: false,
            approved_by: None,
            planned_at: at,
        };
        self.power_plans.insert(room.to_string(), plan);
        Ok(&self.power_plans[room])
    }

    pub fn approve_power_plan(&mut self, room: &str, actor: &ActorId) -> Result<&PowerPlan> {
        let plan = self
            .power_plans
            .get_mut(room)
            .ok_or_else(|| Error::not_found("power plan", room))?;
        if plan.approved {
            return Err(Error::immutable("power plan", room, "already approved"));
        }
        plan.approved = true;
        plan.approved_by = Some(actor.clone());
        Ok(plan)
    }

    pub fn power_plan(&self, room: &str) -> Result<&PowerPlan> {
        self.power_plans
            .get(room)
            .ok_or_else(|| Error::not_found("power plan", room))
    }

    pub fn power_plans(&self) -> impl Iterator<Item = &PowerPlan> {
        self.power_plans.values()
    }

    pub fn export_assets_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "Tag", "Device", "Category", "Vendor", "Location", "Purchase date", "Warranty months", "Status",
        ])
        .expect("in-memory write");
        for a in self.assets.values() {
            w.write_record([
                a.tag.to_string(),
                a.device.clone(),
                a.category.label().to_string(),
                a.vendor_id.to_string(),
                a.location.clone(),
                a.purchase_date.to_string(),
                a.warranty_months.to_string(),
                format!("{:?}", a.status),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }

    /// Full allocate/release history, one row per event.
    pub fn export_licenses_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["Product", "Total", "Action", "User", "Asset tag", "At"])
            .expect("in-memory write");
        for pool in self.licenses.values() {
            for h in &pool.history {
                w.write_record([
                    pool.product.clone(),
                    pool.total.to_string(),
                    format!("{:?}", h.action),
                    h.user.clone(),
                    h.asset_tag.to_string(),
                    h.at.to_rfc3339(),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
    }
}
