use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::expr::{parse, Expr};
use crate::error::{invalid, Result};
use crate::setcore::{IntervalVector, Zonotope};

/// A continuous-time system `ẋ = f(x)` on a box state space with initial and
/// unsafe regions.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub name: String,
    pub dynamics: Vec<Expr>,
    pub state_space: IntervalVector,
    pub initial_sets: Vec<Zonotope>,
    pub unsafe_sets: Vec<Zonotope>,
    affine: Option<(Array2<f64>, Array1<f64>)>,
}

/// Slack allowed when checking that initial sets sit inside the state space.
const CONTAINMENT_TOL: f64 = 1e-9;

impl SystemSpec {
    /// Validates dimensions and detects affine dynamics.
    ///
    /// Initial sets must lie in the state space. Unsafe sets may reach past it:
    /// requiring positivity on a larger set is only stricter.
    pub fn new(
        name: impl Into<String>,
        dynamics: Vec<Expr>,
        state_space: IntervalVector,
        initial_sets: Vec<Zonotope>,
        unsafe_sets: Vec<Zonotope>,
    ) -> Result<Self> {
        let name = name.into();
        let n = state_space.dim();
        if n == 0 {
            return Err(invalid("state space must have at least one dimension"));
        }
        if dynamics.len() != n {
            return Err(invalid(format!(
                "{name}: {} dynamics components for a {n}-dimensional state space",
                dynamics.len()
            )));
        }
        if let Some((i, e)) = dynamics.iter().enumerate().find(|(_, e)| e.arity() > n) {
            return Err(invalid(format!(
                "{name}: component {} ({e}) uses a variable beyond x{n}",
                i + 1
            )));
        }
        for (kind, sets) in [("initial", &initial_sets), ("unsafe", &unsafe_sets)] {
            if let Some(z) = sets.iter().find(|z| z.dim() != n) {
                return Err(invalid(format!(
                    "{name}: {kind} set has dimension {}, expected {n}",
                    z.dim()
                )));
            }
        }
        for (k, z) in initial_sets.iter().enumerate() {
            let hull = z.interval_hull();
            let inside = hull.iter().zip(state_space.iter()).all(|(h, x)| {
                h.lo() >= x.lo() - CONTAINMENT_TOL && h.hi() <= x.hi() + CONTAINMENT_TOL
            });
            if !inside {
                return Err(invalid(format!(
                    "{name}: initial set {k} is not contained in the state space"
                )));
            }
        }
        let affine = detect_affine(&dynamics, n);
        Ok(Self {
            name,
            dynamics,
            state_space,
            initial_sets,
            unsafe_sets,
            affine,
        })
    }

    pub fn dim(&self) -> usize {
        self.state_space.dim()
    }

    pub fn is_linear(&self) -> bool {
        self.affine.is_some()
    }

    /// `(A, k)` with `f(x) = Ax + k` for affine dynamics.
    pub fn affine_form(&self) -> Option<(&Array2<f64>, &Array1<f64>)> {
        self.affine.as_ref().map(|(a, k)| (a, k))
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.dynamics.iter().map(|e| e.eval(x)).collect()
    }

    pub fn from_json_str(src: &str) -> Result<Self> {
        let doc: SystemDoc = serde_json::from_str(src)?;
        doc.into_spec()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        let mut spec = Self::from_json_str(&src)?;
        if spec.name.is_empty() {
            spec.name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
        }
        Ok(spec)
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let doc = SystemDoc {
            name: Some(self.name.clone()),
            dim: self.dim(),
            dynamics: self.dynamics.iter().map(ToString::to_string).collect(),
            state_space: self.state_space.clone(),
            initial_sets: self.initial_sets.iter().cloned().map(SetDoc::Zono).collect(),
            unsafe_sets: self.unsafe_sets.iter().cloned().map(SetDoc::Zono).collect(),
        };
        serde_json::to_value(doc).expect("serializable")
    }
}

fn detect_affine(dynamics: &[Expr], n: usize) -> Option<(Array2<f64>, Array1<f64>)> {
    let mut a = Array2::zeros((n, n));
    let mut k = Array1::zeros(n);
    for (i, e) in dynamics.iter().enumerate() {
        let (row, off) = e.affine_coeffs(n)?;
        a.row_mut(i).assign(&Array1::from(row));
        k[i] = off;
    }
    Some((a, k))
}

/// On-disk system description. Sets are zonotopes or plain boxes.
#[derive(Serialize, Deserialize)]
struct SystemDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    dim: usize,
    dynamics: Vec<String>,
    state_space: IntervalVector,
    #[serde(default)]
    initial_sets: Vec<SetDoc>,
    #[serde(default)]
    unsafe_sets: Vec<SetDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SetDoc {
    Zono(Zonotope),
    Box(IntervalVector),
}

impl SetDoc {
    fn into_zonotope(self) -> Zonotope {
        match self {
            SetDoc::Zono(z) => z,
            SetDoc::Box(b) => Zonotope::from_interval(&b),
        }
    }
}

impl SystemDoc {
    fn into_spec(self) -> Result<SystemSpec> {
        if self.dim != self.state_space.dim() {
            return Err(invalid(format!(
                "dim is {} but the state space has {} intervals",
                self.dim,
                self.state_space.dim()
            )));
        }
        let dynamics = self
            .dynamics
            .iter()
            .map(|s| parse(s))
            .collect::<Result<Vec<_>>>()?;
        SystemSpec::new(
            self.name.unwrap_or_default(),
            dynamics,
            self.state_space,
            self.initial_sets.into_iter().map(SetDoc::into_zonotope).collect(),
            self.unsafe_sets.into_iter().map(SetDoc::into_zonotope).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "dim": 2,
        "dynamics": ["x2", "-x1 + x1^3/3 - x2"],
        "state_space": [[-3.5, 2], [-2, 1]],
        "initial_sets": [[[1, 2], [-0.5, 0.5]]],
        "unsafe_sets": [{ "center": [-1.0, -1.0], "generators": [[0.4, 0.0], [0.0, 0.4]] }]
    }"#;

    #[test]
    fn loads_json_with_boxes_and_zonotopes() {
        let s = SystemSpec::from_json_str(DOC).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(!s.is_linear());
        assert_eq!(s.initial_sets[0].interval_hull().lower(), vec![1.0, -0.5]);
        assert_eq!(s.unsafe_sets[0].num_generators(), 2);
        assert_eq!(s.eval(&[1.0, 1.0]).unwrap(), vec![1.0, -1.0 + 1.0 / 3.0 - 1.0]);
        let again = SystemSpec::from_json_str(&s.to_json_value().to_string()).unwrap();
        assert_eq!(again.eval(&[0.2, 0.7]).unwrap(), s.eval(&[0.2, 0.7]).unwrap());
    }

    #[test]
    fn rejects_inconsistent_documents() {
        let bad_dim = DOC.replace("\"dim\": 2", "\"dim\": 3");
        assert!(SystemSpec::from_json_str(&bad_dim).is_err());
        let bad_var = DOC.replace("\"x2\",", "\"x3\",");
        assert!(SystemSpec::from_json_str(&bad_var).is_err());
        let outside = DOC.replace("[[1, 2], [-0.5, 0.5]]", "[[1, 3], [-0.5, 0.5]]");
        assert!(SystemSpec::from_json_str(&outside).is_err());
    }

    #[test]
    fn affine_dynamics_detected() {
        let doc = DOC.replace("-x1 + x1^3/3 - x2", "-x1 - x2");
        let s = SystemSpec::from_json_str(&doc).unwrap();
        let (a, k) = s.affine_form().unwrap();
        assert_eq!(a, &ndarray::array![[0.0, 1.0], [-1.0, -1.0]]);
        assert_eq!(k, &ndarray::array![0.0, 0.0]);
    }
}
