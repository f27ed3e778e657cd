//! Tabular serialization of computed results, as CSV or as a JSON array of
//! row objects with the same field names.
//!
//! Floats use shortest round-trip formatting in both formats, so identical
//! inputs give byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dynamics::{EvolutionRecord, IprScan};
use crate::error::{Error, Result};
use crate::meanfield::{BoundarySet, GapKind};
use crate::spectral::{EnergyDensity, QuasienergySweep};
use crate::topology::{ChiralDisplacementSeries, SiteFlag, WindingMethod, WindingProfile};

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn write_rows<W: Write, R: Serialize>(mut out: W, rows: impl IntoIterator<Item = R>, format: Format) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in rows {
                w.serialize(r).map_err(io_err)?;
            }
            w.flush().map_err(io_err)
        }
        Format::Json => {
            // one row object per line
            out.write_all(b"[").map_err(io_err)?;
            for (i, r) in rows.into_iter().enumerate() {
                out.write_all(if i == 0 { b"\n" } else { b",\n" }).map_err(io_err)?;
                serde_json::to_writer(&mut out, &r).map_err(io_err)?;
            }
            out.write_all(b"\n]\n").map_err(io_err)?;
            out.flush().map_err(io_err)
        }
    }
}

#[derive(Serialize)]
struct SweepCsv {
    kappa1: f64,
    index: usize,
    quasienergy: f64,
}

pub fn write_sweep<W: Write>(out: W, sweep: &QuasienergySweep, format: Format) -> Result<()> {
    write_rows(
        out,
        sweep.rows.iter().flat_map(|r| {
            r.quasienergies.iter().enumerate().map(move |(index, &quasienergy)| SweepCsv {
                kappa1: r.kappa1,
                index,
                quasienergy,
            })
        }),
        format,
    )
}

#[derive(Serialize)]
struct DensityCsv {
    m: i64,
    index: usize,
    quasienergy: f64,
    probability: f64,
}

pub fn write_density<W: Write>(out: W, d: &EnergyDensity, format: Format) -> Result<()> {
    write_rows(
        out,
        d.quasienergies.iter().enumerate().flat_map(|(index, &quasienergy)| {
            d.m_values.iter().enumerate().map(move |(row, &m)| DensityCsv {
                m,
                index,
                quasienergy,
                probability: d.prob[[row, index]],
            })
        }),
        format,
    )
}

#[derive(Serialize)]
struct WindingCsv {
    method: WindingMethod,
    m: i64,
    w0: f64,
    wpi: f64,
    flag: SiteFlag,
}

pub fn write_winding<W: Write>(out: W, p: &WindingProfile, format: Format) -> Result<()> {
    write_rows(
        out,
        p.records.iter().map(|r| WindingCsv {
            method: p.method,
            m: r.m,
            w0: r.w0,
            wpi: r.wpi,
            flag: r.flag,
        }),
        format,
    )
}

#[derive(Serialize)]
struct BoundaryCsv {
    mu: u32,
    nu: u32,
    kind: GapKind,
    phi: f64,
    m_plus: f64,
    m_minus: f64,
    m_floor_plus: i64,
    m_floor_minus: i64,
}

pub fn write_boundaries<W: Write>(out: W, b: &BoundarySet, format: Format) -> Result<()> {
    write_rows(
        out,
        b.entries.iter().map(|e| BoundaryCsv {
            mu: e.mu,
            nu: e.nu,
            kind: e.kind,
            phi: e.phi,
            m_plus: e.m_plus,
            m_minus: e.m_minus,
            m_floor_plus: e.m_floor_plus,
            m_floor_minus: e.m_floor_minus,
        }),
        format,
    )
}

#[derive(Serialize)]
struct CdCsv {
    frame: String,
    m: i64,
    n: usize,
    value: f64,
}

pub fn write_cd_series<'a, W: Write>(out: W, series: impl IntoIterator<Item = &'a ChiralDisplacementSeries>, format: Format) -> Result<()> {
    write_rows(
        out,
        series.into_iter().flat_map(|s| {
            s.values.iter().enumerate().map(move |(n, &value)| CdCsv {
                frame: s.frame.to_string(),
                m: s.m,
                n,
                value,
            })
        }),
        format,
    )
}

#[derive(Serialize)]
struct EvolutionCsv {
    n: usize,
    m: i64,
    p_up: f64,
    p_down: f64,
}

pub fn write_evolution<W: Write>(out: W, rec: &EvolutionRecord, format: Format) -> Result<()> {
    write_rows(
        out,
        (0..=rec.steps()).flat_map(|n| {
            rec.m_values.iter().enumerate().map(move |(i, &m)| EvolutionCsv {
                n,
                m,
                p_up: rec.p_up[[i, n]],
                p_down: rec.p_down[[i, n]],
            })
        }),
        format,
    )
}

#[derive(Serialize)]
struct IprCsv {
    m0: i64,
    ipr: f64,
}

pub fn write_ipr<W: Write>(out: W, scan: &IprScan, format: Format) -> Result<()> {
    write_rows(
        out,
        scan.centers.iter().zip(&scan.values).map(|(&m0, &ipr)| IprCsv { m0, ipr }),
        format,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::KickParams;
    use crate::meanfield::boundary_locations;
    use crate::spin_ops::SpinSpace;
    use crate::topology::WindingRecord;

    #[test]
    fn boundary_csv_layout() {
        let k = KickParams::new(4.25 * std::f64::consts::PI, 0.5 * std::f64::consts::PI).unwrap();
        let b = boundary_locations(SpinSpace::new(200).unwrap(), k);
        let mut buf = Vec::new();
        write_boundaries(&mut buf, &b, Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "mu,nu,kind,phi,m_plus,m_minus,m_floor_plus,m_floor_minus"
        );
        assert!(lines.next().unwrap().starts_with("4,0,zero,0.0,67.5"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn winding_csv_layout() {
        let p = WindingProfile {
            method: WindingMethod::Quantum,
            records: vec![WindingRecord {
                m: -1,
                w0: 5.0,
                wpi: -4.0,
                flag: SiteFlag::Bulk,
            }],
        };
        let mut buf = Vec::new();
        write_winding(&mut buf, &p, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "method,m,w0,wpi,flag\nquantum,-1,5.0,-4.0,bulk\n");
        let mut buf = Vec::new();
        write_winding(&mut buf, &p, Format::Json).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "[\n{\"method\":\"quantum\",\"m\":-1,\"w0\":5.0,\"wpi\":-4.0,\"flag\":\"bulk\"}\n]\n"
        );
    }
}
