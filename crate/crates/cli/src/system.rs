//! System-definition files (strict JSON) and their loaded form.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;

use noether_core::expr::Expr;
use noether_core::flows::{InitialState, ParamValues};
use noether_core::lagrangian::LagrangianSystem;
use noether_core::noether::{is_conserved, ConservedQuantity, SymmetryGenerator};
use noether_core::parse::parse;
use noether_core::sample::NumericEq;
use noether_core::sym::VariableSpace;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateDecl {
    pub t: f64,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
}

impl StateDecl {
    pub fn to_state(&self) -> InitialState {
        InitialState { t: self.t, q: self.q.clone(), qd: self.qd.clone() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorDecl {
    pub components: Vec<String>,
    #[serde(default)]
    pub tau: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryDecl {
    #[serde(default)]
    pub label: Option<String>,
    pub initial: StateDecl,
    pub t_end: f64,
    #[serde(default = "default_traj_tol")]
    pub tol: f64,
}

fn default_traj_tol() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDecl {
    pub generator: String,
    pub state: StateDecl,
    pub epsilon: f64,
    #[serde(default = "default_flow_tol")]
    pub tol: f64,
}

fn default_flow_tol() -> f64 {
    1e-10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorDecl {
    pub integrals: Vec<String>,
    #[serde(default)]
    pub jump_threshold: Option<f64>,
    #[serde(default)]
    pub drift_tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleDecl {
    pub family: Vec<String>,
    pub branch_seed: StateDecl,
    #[serde(default)]
    pub base: Option<StateDecl>,
}

/// On-disk schema of a system file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub coordinates: Option<Vec<String>>,
    pub lagrangian: String,
    #[serde(default)]
    pub parameters: BTreeMap<String, Option<f64>>,
    #[serde(default)]
    pub conserved: BTreeMap<String, String>,
    #[serde(default)]
    pub generators: BTreeMap<String, GeneratorDecl>,
    #[serde(default)]
    pub trajectories: Vec<TrajectoryDecl>,
    #[serde(default)]
    pub flows: Vec<FlowDecl>,
    #[serde(default)]
    pub monitor: Option<MonitorDecl>,
    #[serde(default)]
    pub liouville: Option<LiouvilleDecl>,
}

/// Fully parsed and validated system, ready for the commands.
pub struct Loaded {
    pub file: SystemFile,
    pub digest: String,
    pub sys: LagrangianSystem,
    pub params: ParamValues,
    pub conserved: BTreeMap<String, ConservedQuantity>,
    pub generators: BTreeMap<String, SymmetryGenerator>,
    pub checker: NumericEq,
}

fn parse_expr(src: &str, space: &VariableSpace, what: &str) -> Result<Expr> {
    parse(src, space).map_err(|diags| {
        let msgs: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        anyhow!("{what}: {}", msgs.join("; "))
    })
}

pub fn load(path: &std::path::Path, checker: &NumericEq) -> Result<Loaded> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let digest = {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(&bytes);
        hex_string(&h.finalize())
    };
    let file: SystemFile = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing {}", path.display()))?;

    if file.n == 0 {
        bail!("n must be positive");
    }
    if let Some(coords) = &file.coordinates {
        if coords.len() != file.n {
            bail!("{} coordinate names for n = {}", coords.len(), file.n);
        }
    }
    let param_names: Vec<&str> = file.parameters.keys().map(|s| s.as_str()).collect();
    let space = match &file.coordinates {
        Some(coords) => {
            let refs: Vec<&str> = coords.iter().map(|s| s.as_str()).collect();
            VariableSpace::with_names(&refs, &param_names)?
        }
        None => VariableSpace::new(file.n, &param_names)?,
    };

    // Pin declared parameter defaults into the sampling configuration.
    let mut checker = checker.clone();
    let mut params: ParamValues = vec![None; space.params().len()];
    for (name, value) in &file.parameters {
        let idx = space.param_index(name).expect("declared above");
        params[idx as usize] = *value;
        if let Some(v) = value {
            checker.pinned.insert(space.param_sym(name).unwrap(), *v);
        }
    }

    let lagrangian = parse_expr(&file.lagrangian, &space, "lagrangian")?;
    let sys = LagrangianSystem::build(space.clone(), lagrangian, &checker)?;

    let mut conserved = BTreeMap::new();
    for (name, src) in &file.conserved {
        let e = parse_expr(src, &space, &format!("conserved `{name}`"))?;
        conserved.insert(name.clone(), is_conserved(&sys, &e, &checker.salted(7)));
    }
    let mut generators = BTreeMap::new();
    for (name, decl) in &file.generators {
        let comps = decl
            .components
            .iter()
            .map(|c| parse_expr(c, &space, &format!("generator `{name}`")))
            .collect::<Result<Vec<_>>>()?;
        let tau = decl
            .tau
            .as_ref()
            .map(|t| parse_expr(t, &space, &format!("generator `{name}` tau")))
            .transpose()?;
        generators.insert(name.clone(), SymmetryGenerator::new(&sys, comps, tau)?);
    }

    // Validate references.
    if let Some(m) = &file.monitor {
        for name in &m.integrals {
            if !conserved.contains_key(name) {
                bail!("monitor references undeclared integral `{name}`");
            }
        }
    }
    if let Some(l) = &file.liouville {
        for name in &l.family {
            if !conserved.contains_key(name) {
                bail!("liouville family references undeclared integral `{name}`");
            }
        }
        validate_state(&l.branch_seed, file.n, "liouville.branch_seed")?;
        if let Some(b) = &l.base {
            validate_state(b, file.n, "liouville.base")?;
        }
    }
    for f in &file.flows {
        if !generators.contains_key(&f.generator) {
            bail!("flow references undeclared generator `{}`", f.generator);
        }
        validate_state(&f.state, file.n, "flow.state")?;
    }
    for t in &file.trajectories {
        validate_state(&t.initial, file.n, "trajectory.initial")?;
    }

    Ok(Loaded { file, digest, sys, params, conserved, generators, checker })
}

fn validate_state(s: &StateDecl, n: usize, what: &str) -> Result<()> {
    if s.q.len() != n || s.qd.len() != n {
        bail!("{what}: expected {n} q and qd components");
    }
    Ok(())
}

pub fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
