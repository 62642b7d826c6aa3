//! Pavement Distress Index: `PDI = Σ W_i · (S_i · d_i)` over a section's
//! distress records.
//!
//! Densities are summed in their native units (m for cracks, m² for area
//! distresses) without normalization.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::csv_err;
use crate::model::{natural_cmp, DistressRecord, DistressType};

pub const PDI_HEADER: [&str; 2] = ["section_id", "pdi"];

/// Weight per distress type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<DistressType, f64>", into = "BTreeMap<DistressType, f64>")]
pub struct WeightTable {
    weights: BTreeMap<DistressType, f64>,
}

impl Default for WeightTable {
    fn default() -> Self {
        use DistressType::*;
        WeightTable {
            weights: BTreeMap::from([
                (LongitudinalCrack, 2.0),
                (TransverseCrack, 2.0),
                (AlligatorCrack, 3.0),
                (Pothole, 3.0),
                (Patching, 1.0),
                (Corrugation, 1.5),
            ]),
        }
    }
}

impl TryFrom<BTreeMap<DistressType, f64>> for WeightTable {
    type Error = Error;
    fn try_from(weights: BTreeMap<DistressType, f64>) -> Result<Self> {
        WeightTable::new(weights)
    }
}

impl From<WeightTable> for BTreeMap<DistressType, f64> {
    fn from(t: WeightTable) -> Self {
        t.weights
    }
}

impl WeightTable {
    /// A table may omit types; records of an omitted type are rejected by
    /// [`compute_pdi`].
    pub fn new(weights: BTreeMap<DistressType, f64>) -> Result<Self> {
        for (ty, w) in &weights {
            if !w.is_finite() || *w <= 0.0 {
                return Err(Error::invalid(format!("weight for {ty} must be positive, got {w}")));
            }
        }
        Ok(WeightTable { weights })
    }

    /// Default weights with some entries replaced.
    pub fn with_overrides(overrides: &BTreeMap<DistressType, f64>) -> Result<Self> {
        let mut weights = WeightTable::default().weights;
        weights.extend(overrides.iter().map(|(k, v)| (*k, *v)));
        WeightTable::new(weights)
    }

    pub fn get(&self, ty: DistressType) -> Option<f64> {
        self.weights.get(&ty).copied()
    }
}

/// PDI per section. Every id in `sections` appears in the result (0 when it
/// has no records), as does every section that has records.
pub fn compute_pdi(
    records: &[DistressRecord],
    weights: &WeightTable,
    sections: &[String],
) -> Result<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = sections.iter().map(|s| (s.clone(), 0.0)).collect();
    for r in records {
        let w = weights.get(r.distress_type()).ok_or_else(|| {
            Error::invalid(format!("distress type {} has no weight", r.distress_type()))
        })?;
        *out.entry(r.section_id().to_string()).or_insert(0.0) +=
            w * (f64::from(r.severity().code()) * r.density());
    }
    Ok(out)
}

pub fn write_pdi_csv<W: Write>(writer: W, pdi: &BTreeMap<String, f64>) -> Result<()> {
    write_section_values(writer, &PDI_HEADER, pdi)
}

/// Two-column per-section CSV in natural section order.
pub(crate) fn write_section_values<W: Write>(writer: W, header: &[&str; 2], values: &BTreeMap<String, f64>) -> Result<()> {
    let mut keys: Vec<&String> = values.keys().collect();
    keys.sort_by(|a, b| natural_cmp(a, b));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header).map_err(csv_err)?;
    for k in keys {
        w.write_record([k.clone(), values[k].to_string()]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
