//! Symbols and the variable space they resolve against.
//!
//! Expressions reference symbols by index, not by name: `Sym` is a small
//! `Copy` token and the [`VariableSpace`] owns the naming. Jet order 0 is
//! the coordinate `q^i`, order 1 the velocity, order 2 the acceleration;
//! higher orders appear only transiently inside Euler-Lagrange operator
//! rewriting and are never parsed from user input.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// Highest jet order representable. User-facing expressions stop at 2
/// (accelerations); orders 3 and 4 arise while applying total derivatives
/// inside the Euler-Lagrange operators.
pub const MAX_JET_ORDER: u8 = 4;

/// A resolved symbol reference.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug, Hash)]
pub enum Sym {
    /// The time variable `t`.
    Time,
    /// Jet coordinate: order 0 = `q^i`, 1 = `qd^i`, 2 = `qdd^i`, ...
    /// Index is 0-based.
    Jet { order: u8, index: u16 },
    /// Named parameter (mass, coupling, conserved-value label, ...).
    Param(u16),
}

impl Sym {
    pub fn coord(i: usize) -> Sym {
        Sym::Jet { order: 0, index: i as u16 }
    }

    pub fn vel(i: usize) -> Sym {
        Sym::Jet { order: 1, index: i as u16 }
    }

    pub fn accel(i: usize) -> Sym {
        Sym::Jet { order: 2, index: i as u16 }
    }

    /// Jet order of the symbol, with `t` and parameters counting as order 0.
    pub fn jet_order(&self) -> u8 {
        match self {
            Sym::Jet { order, .. } => *order,
            _ => 0,
        }
    }
}

/// Declared variables of a system: time, `N` coordinates with their jet
/// prolongations, and free parameters.
#[derive(Clone, Debug)]
pub struct VariableSpace {
    dof: usize,
    coord_names: Vec<String>,
    params: Vec<String>,
}

/// Error raised when a [`VariableSpace`] declaration is inconsistent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceError {
    ZeroDof,
    DuplicateName(String),
    ReservedName(String),
}

impl fmt::Display for SpaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceError::ZeroDof => write!(f, "a system needs at least one degree of freedom"),
            SpaceError::DuplicateName(n) => write!(f, "duplicate name `{n}`"),
            SpaceError::ReservedName(n) => {
                write!(f, "`{n}` collides with a reserved variable name")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SpaceError {}

/// True when `name` is one of the reserved identifiers `t`, `qK`, `qdK`,
/// `qddK` for some index K.
fn is_reserved(name: &str) -> bool {
    if name == "t" {
        return true;
    }
    for prefix in ["qdd", "qd", "q"] {
        if let Some(rest) = name.strip_prefix(prefix) {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return true;
            }
        }
    }
    false
}

impl VariableSpace {
    /// Space with default coordinate names `q1..qN` and the given parameters.
    pub fn new(dof: usize, params: &[&str]) -> Result<Self, SpaceError> {
        let names: Vec<String> = (1..=dof).map(|i| format!("q{i}")).collect();
        let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Self::with_names(&name_refs, params)
    }

    /// Space with explicit display names for the coordinates.
    ///
    /// Display names are used in reports only; expression text always uses
    /// the positional `q1..qN` grammar.
    pub fn with_names(coord_names: &[&str], params: &[&str]) -> Result<Self, SpaceError> {
        if coord_names.is_empty() {
            return Err(SpaceError::ZeroDof);
        }
        let mut seen: Vec<&str> = Vec::new();
        for p in params {
            if is_reserved(p) {
                return Err(SpaceError::ReservedName(p.to_string()));
            }
            if seen.contains(p) {
                return Err(SpaceError::DuplicateName(p.to_string()));
            }
            seen.push(p);
        }
        let mut coord_seen: Vec<&str> = Vec::new();
        for c in coord_names {
            if coord_seen.contains(c) {
                return Err(SpaceError::DuplicateName(c.to_string()));
            }
            coord_seen.push(c);
        }
        Ok(VariableSpace {
            dof: coord_names.len(),
            coord_names: coord_names.iter().map(|s| s.to_string()).collect(),
            params: params.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Number of degrees of freedom `N`.
    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn coord_display_name(&self, i: usize) -> &str {
        &self.coord_names[i]
    }

    pub fn params(&self) -> &[String] {
        &self.params
    }

    pub fn param_index(&self, name: &str) -> Option<u16> {
        self.params.iter().position(|p| p == name).map(|i| i as u16)
    }

    pub fn param_sym(&self, name: &str) -> Option<Sym> {
        self.param_index(name).map(Sym::Param)
    }

    /// Extends the space with additional parameters, keeping every existing
    /// symbol index valid. Fails on name collisions.
    pub fn extend_params(&self, extra: &[&str]) -> Result<Self, SpaceError> {
        let mut params: Vec<&str> = self.params.iter().map(|s| s.as_str()).collect();
        for e in extra {
            params.push(e);
        }
        let name_refs: Vec<&str> = self.coord_names.iter().map(|s| s.as_str()).collect();
        Self::with_names(&name_refs, &params)
    }

    /// Resolves a grammar identifier (`t`, `q3`, `qd1`, `qdd2`, or a
    /// declared parameter name) to a symbol.
    pub fn resolve(&self, ident: &str) -> Option<Sym> {
        if ident == "t" {
            return Some(Sym::Time);
        }
        for (prefix, order) in [("qdd", 2u8), ("qd", 1), ("q", 0)] {
            if let Some(rest) = ident.strip_prefix(prefix) {
                if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                    // One-based indices in the textual grammar.
                    let k: usize = rest.parse().ok()?;
                    if k >= 1 && k <= self.dof {
                        return Some(Sym::Jet { order, index: (k - 1) as u16 });
                    }
                    return None;
                }
            }
        }
        self.param_sym(ident)
    }

    /// Canonical textual name of a symbol (the grammar spelling).
    pub fn name_of(&self, sym: Sym) -> String {
        match sym {
            Sym::Time => "t".to_string(),
            Sym::Jet { order, index } => {
                let mut s = String::from("q");
                for _ in 0..order {
                    s.push('d');
                }
                format!("{s}{}", index + 1)
            }
            Sym::Param(i) => self.params[i as usize].clone(),
        }
    }
}
