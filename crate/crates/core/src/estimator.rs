//! Basic COCOMO: effort, schedule and cost from physical SLOC.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimateError {
    #[error("invalid COCOMO parameter {name} = {value}: {rule}")]
    InvalidParam { name: &'static str, value: f64, rule: &'static str },
    #[error("{what} must be a finite non-negative number, got {value}")]
    Domain { what: &'static str, value: f64 },
}

/// Coefficients of the organic-mode basic model plus the salary and
/// overhead used to turn effort into money.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CocomoParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// USD per person-year.
    pub salary: f64,
    pub overhead: f64,
}

impl Default for CocomoParams {
    fn default() -> Self {
        CocomoParams {
            a: 2.4,
            b: 1.05,
            c: 2.5,
            d: 0.38,
            salary: 56_286.0,
            overhead: 2.4,
        }
    }
}

impl CocomoParams {
    pub fn validate(&self) -> Result<(), EstimateError> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(EstimateError::InvalidParam { name, value, rule: "must be > 0" })
            }
        };
        positive("a", self.a)?;
        positive("c", self.c)?;
        positive("salary", self.salary)?;
        positive("overhead", self.overhead)?;
        if !(self.b.is_finite() && self.b >= 1.0) {
            return Err(EstimateError::InvalidParam { name: "b", value: self.b, rule: "must be >= 1" });
        }
        if !(self.d > 0.0 && self.d < 1.0) {
            return Err(EstimateError::InvalidParam { name: "d", value: self.d, rule: "must be in (0, 1)" });
        }
        Ok(())
    }
}

fn non_negative(what: &'static str, value: f64) -> Result<f64, EstimateError> {
    if value.is_finite() && value >= 0.0 {
        Ok(value)
    } else {
        Err(EstimateError::Domain { what, value })
    }
}

/// Person-months for `ksloc` thousand lines: a·KSLOC^b.
pub fn effort(ksloc: f64, params: &CocomoParams) -> Result<f64, EstimateError> {
    Ok(params.a * non_negative("ksloc", ksloc)?.powf(params.b))
}

/// Calendar months for an effort in person-months: c·E^d.
pub fn schedule(effort_pm: f64, params: &CocomoParams) -> Result<f64, EstimateError> {
    Ok(params.c * non_negative("effort", effort_pm)?.powf(params.d))
}

/// USD: person-years times salary times overhead.
pub fn cost(effort_pm: f64, params: &CocomoParams) -> Result<f64, EstimateError> {
    Ok(non_negative("effort", effort_pm)? / 12.0 * params.salary * params.overhead)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleBasis {
    /// Effort summed over packages, schedule of the longest package.
    #[default]
    PerPackageMax,
    /// The whole release treated as one project.
    Monolithic,
}

impl std::str::FromStr for ScheduleBasis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "per-package-max" | "per_package_max" => Ok(ScheduleBasis::PerPackageMax),
            "monolithic" => Ok(ScheduleBasis::Monolithic),
            other => Err(format!("unknown schedule basis `{other}` (per-package-max, monolithic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageEstimate {
    pub name: String,
    pub sloc: u64,
    pub effort_pm: f64,
    pub schedule_months: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub total_sloc: u64,
    pub effort_pm: f64,
    pub effort_py: f64,
    pub schedule_months: f64,
    pub schedule_basis: ScheduleBasis,
    pub cost_usd: f64,
    pub params: CocomoParams,
    pub per_package: Vec<PackageEstimate>,
}

pub fn estimate_release(
    per_package_sloc: &[(String, u64)],
    params: &CocomoParams,
    basis: ScheduleBasis,
) -> Result<EstimateResult, EstimateError> {
    params.validate()?;
    let mut per_package = Vec::with_capacity(per_package_sloc.len());
    for (name, sloc) in per_package_sloc {
        let e = effort(*sloc as f64 / 1000.0, params)?;
        per_package.push(PackageEstimate {
            name: name.clone(),
            sloc: *sloc,
            effort_pm: e,
            schedule_months: schedule(e, params)?,
        });
    }
    let total_sloc: u64 = per_package_sloc.iter().map(|(_, s)| s).sum();
    let (effort_pm, schedule_months) = match basis {
        ScheduleBasis::PerPackageMax => (
            per_package.iter().map(|p| p.effort_pm).sum(),
            per_package.iter().map(|p| p.schedule_months).fold(0.0, f64::max),
        ),
        ScheduleBasis::Monolithic => {
            let e = effort(total_sloc as f64 / 1000.0, params)?;
            (e, schedule(e, params)?)
        }
    };
    Ok(EstimateResult {
        total_sloc,
        effort_pm,
        effort_py: effort_pm / 12.0,
        schedule_months,
        schedule_basis: basis,
        cost_usd: cost(effort_pm, params)?,
        params: *params,
        per_package,
    })
}
