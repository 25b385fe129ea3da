//! Dimension counts for jet spaces of submanifolds and codimension lower
//! bounds for the curvature and tangency loci.
//!
//! Everything here is exact integer arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::poly::binomial;

/// Indexes `Jet^l_{d,n}`: `l`-jets of `d`-dimensional submanifolds of `C^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JetSpec {
    pub d: u32,
    pub n: u32,
    pub l: u32,
}

impl JetSpec {
    pub fn new(d: u32, n: u32, l: u32) -> Result<Self> {
        if d < 1 || n <= d {
            return invalid(format!("need 1 <= d < n, got d={d}, n={n}"));
        }
        Ok(JetSpec { d, n, l })
    }

    pub fn codim(&self) -> u32 {
        self.n - self.d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "tag", content = "l")]
pub enum LocusId {
    Inflection,
    RicciDegenerate,
    ScalarFlat,
    HolSecDegenerate,
    HolBisecDegenerate,
    ExteriorCotangent(u32),
    ExteriorNormal(u32),
    LineTangency(u32),
    Transversality,
}

impl LocusId {
    /// Parses names like `ricci`, `exterior-cotangent`, `line-tangency`,
    /// taking the order parameter from `l` where one is needed.
    pub fn parse(name: &str, l: u32) -> Result<Self> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let id = match key.as_str() {
            "inflection" => LocusId::Inflection,
            "ricci" | "riccidegenerate" => LocusId::RicciDegenerate,
            "scalar" | "scalarflat" => LocusId::ScalarFlat,
            "holsec" | "holsecdegenerate" => LocusId::HolSecDegenerate,
            "holbisec" | "holbisecdegenerate" => LocusId::HolBisecDegenerate,
            "exteriorcotangent" | "cotangent" => LocusId::ExteriorCotangent(l),
            "exteriornormal" | "normal" => LocusId::ExteriorNormal(l),
            "linetangency" => LocusId::LineTangency(l),
            "transversality" => LocusId::Transversality,
            _ => return invalid(format!("unknown locus '{name}'")),
        };
        Ok(id)
    }

    fn order(&self) -> Option<u32> {
        match self {
            LocusId::ExteriorCotangent(l) | LocusId::ExteriorNormal(l) | LocusId::LineTangency(l) => Some(*l),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodimReport {
    pub locus: LocusId,
    pub spec: JetSpec,
    /// Lower bound on the codimension; may be negative, in which case it is
    /// vacuous.
    pub codim_lower_bound: i64,
    pub threshold_holds: bool,
    pub hypothesis_name: String,
    /// Whether the dimension hypothesis under which the locus can be avoided holds for
    /// this `(d, n, l)`.
    pub hypothesis_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `dim Jet^l_{d,n} = n C(d+l,d) - d (C(d+l,d) - 1)`.
pub fn jet_space_dim(spec: JetSpec) -> u64 {
    let c = binomial((spec.d + spec.l) as u64, spec.d as u64);
    spec.n as u64 * c - spec.d as u64 * (c - 1)
}

/// Rank of the fiber of `Jet^l -> Jet^{l-1}`: `(n-d) C(d+l-1, l)`.
pub fn fiber_rank(d: u32, n: u32, l: u32) -> u64 {
    if l == 0 {
        return n as u64;
    }
    (n - d) as u64 * binomial((d + l - 1) as u64, l as u64)
}

/// `max(0, codim_A - dim_fiber)`: the codimension left after projecting
/// along a fiber of the given dimension.
pub fn elimination_bound(codim_a: i64, dim_fiber: i64) -> i64 {
    (codim_a - dim_fiber).max(0)
}

const NORMAL_NOTE: &str = "the dual inequality also appears with right-hand side 2d(1-l); \
     this report uses l(n-l) <= 2d(l-1), and the bound is the analogue (1+d) + 2d(l-1) - l(n-l) \
     built so that the threshold matches that inequality";

pub fn locus_codim(locus: LocusId, spec: JetSpec) -> Result<CodimReport> {
    let d = spec.d as i64;
    let n = spec.n as i64;
    if let Some(l) = locus.order() {
        if l < 1 {
            return invalid(format!("{locus:?} needs an order l >= 1"));
        }
    }
    let mut note = None;
    let (codim, hyp_name, hyp): (i64, String, bool) = match locus {
        LocusId::Inflection => {
            if d != 1 {
                return invalid("Inflection is a locus of curves and needs d = 1");
            }
            (n - 1, "n >= 3 (curves)".into(), n >= 3)
        }
        LocusId::RicciDegenerate => (d * (n - d - 1) + 1, "d <= n - 2".into(), d <= n - 2),
        LocusId::ScalarFlat => (
            d * (d + 1) * (n - d) / 2,
            "d <= n - 1 and n >= 3".into(),
            d < n && n >= 3,
        ),
        LocusId::HolSecDegenerate => (n - 2 * d + 1, "n >= 3d".into(), n >= 3 * d),
        LocusId::HolBisecDegenerate => (n - 3 * d + 2, "n >= 4d - 1".into(), n >= 4 * d - 1),
        LocusId::ExteriorCotangent(l) => {
            let l = l as i64;
            if l > d {
                return invalid(format!("exterior power l={l} exceeds d={d}"));
            }
            (
                1 - d + l * (n + l) - 2 * d * l,
                "2d(1+l) <= l(n+l)".into(),
                2 * d * (1 + l) <= l * (n + l),
            )
        }
        LocusId::ExteriorNormal(l) => {
            let l = l as i64;
            if l > n - d {
                return invalid(format!("exterior power l={l} exceeds n-d={}", n - d));
            }
            note = Some(NORMAL_NOTE.to_string());
            (
                1 + d + 2 * d * (l - 1) - l * (n - l),
                "l(n-l) <= 2d(l-1)".into(),
                l * (n - l) <= 2 * d * (l - 1),
            )
        }
        LocusId::LineTangency(l) => {
            if d != n - 1 {
                return invalid("LineTangency is a locus of hypersurfaces and needs d = n - 1");
            }
            let l = l as i64;
            (l + 1 - n, "l >= 2n - 1 (hypersurfaces)".into(), l >= 2 * n - 1)
        }
        LocusId::Transversality => (
            // codimension of non-surjective differentials inside the jets
            // vanishing at the point, with m = n - d equations
            d + 1,
            "always".into(),
            true,
        ),
    };
    Ok(CodimReport {
        locus,
        spec,
        codim_lower_bound: codim,
        threshold_holds: codim > d,
        hypothesis_name: hyp_name,
        hypothesis_holds: hyp,
        note,
    })
}

/// One report per case applicable to `(d, n)`: the five curvature
/// cases, then the cotangent exterior powers `1 <= l <= d` and the normal
/// exterior powers `2 <= l <= n - d`.
pub fn threshold_table(d: u32, n: u32) -> Result<Vec<CodimReport>> {
    let base = JetSpec::new(d, n, 2)?;
    let mut out = Vec::new();
    if d == 1 {
        out.push(locus_codim(LocusId::Inflection, base)?);
    } else {
        // the curve case does not apply; report it as failing its hypothesis
        let mut r = locus_codim(LocusId::Inflection, JetSpec::new(1, n, 2)?)?;
        r.spec = base;
        r.hypothesis_holds = false;
        r.threshold_holds = r.codim_lower_bound > d as i64;
        r.note = Some("curve case; not applicable for d > 1".into());
        out.push(r);
    }
    for locus in [
        LocusId::RicciDegenerate,
        LocusId::ScalarFlat,
        LocusId::HolSecDegenerate,
        LocusId::HolBisecDegenerate,
    ] {
        out.push(locus_codim(locus, base)?);
    }
    for l in 1..=d {
        out.push(locus_codim(LocusId::ExteriorCotangent(l), base)?);
    }
    for l in 2..=(n - d) {
        out.push(locus_codim(LocusId::ExteriorNormal(l), base)?);
    }
    Ok(out)
}

/// Fixed-width text rendering of a list of reports.
pub fn render_table(reports: &[CodimReport]) -> String {
    let mut s = format!(
        "{:<24} {:>3} {:>3} {:>3} {:>8} {:>9} {:>5}  {}\n",
        "locus", "d", "n", "l", "codim>=", "threshold", "hyp", "hypothesis"
    );
    for r in reports {
        let name = match r.locus {
            LocusId::ExteriorCotangent(l) => format!("ExteriorCotangent({l})"),
            LocusId::ExteriorNormal(l) => format!("ExteriorNormal({l})"),
            LocusId::LineTangency(l) => format!("LineTangency({l})"),
            other => format!("{other:?}"),
        };
        s.push_str(&format!(
            "{:<24} {:>3} {:>3} {:>3} {:>8} {:>9} {:>5}  {}\n",
            name,
            r.spec.d,
            r.spec.n,
            r.spec.l,
            r.codim_lower_bound,
            r.threshold_holds,
            r.hypothesis_holds,
            r.hypothesis_name
        ));
    }
    s
}
