//! Operator-support propagation through the brickwork layout.
//!
//! The cone of the conjugated butterfly U^dag B U spreads through the circuit
//! layers in reverse order (with U = L_d ... L_1, the innermost conjugation
//! is by L_d). Disjointness of that cone from the measurement support
//! certifies OTOC moments equal to 1 for every gate assignment with this
//! layout; gate contents are ignored. By path symmetry the same check can be
//! run as a forward propagation of the measurement support, which is what
//! the incremental depth search uses.

use crate::ensemble::{brickwork_layout, layer_pattern, BrickworkPhase, GridGeometry};
use crate::error::{Error, Result};
use crate::pauli::PauliString;
use std::collections::BTreeSet;

pub type SupportSet = BTreeSet<usize>;

pub fn support_of(p: &PauliString) -> SupportSet {
    p.sites().collect()
}

/// Expands `initial` through the given layer patterns in the order given:
/// any pair touching a supported site adds its partner.
pub fn propagate_support(
    geometry: &GridGeometry,
    layout: &[Vec<(usize, usize)>],
    initial: &SupportSet,
) -> Result<SupportSet> {
    let n = geometry.n_qubits();
    if initial.is_empty() {
        return Err(Error::InvalidOperator("initial support is empty".into()));
    }
    for &site in initial {
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n });
        }
    }
    let mut support = initial.clone();
    for pattern in layout {
        let mut added = Vec::new();
        for &(a, b) in pattern {
            if a >= n || b >= n {
                return Err(Error::SiteOutOfRange { site: a.max(b), n });
            }
            match (support.contains(&a), support.contains(&b)) {
                (true, false) => added.push(b),
                (false, true) => added.push(a),
                _ => {}
            }
        }
        support.extend(added);
    }
    Ok(support)
}

/// Light cone of the conjugated operator after `depth` layers: the first
/// `depth` brickwork patterns traversed in reverse.
pub fn conjugation_cone(
    geometry: &GridGeometry,
    depth: usize,
    initial: &SupportSet,
) -> Result<SupportSet> {
    let mut layout = brickwork_layout(geometry, depth);
    layout.reverse();
    propagate_support(geometry, &layout, initial)
}

/// Size of the conjugated-operator cone after each depth, index 0 = depth 0.
pub fn support_growth(
    geometry: &GridGeometry,
    depth: usize,
    initial: &SupportSet,
) -> Result<Vec<usize>> {
    (0..=depth)
        .map(|d| Ok(conjugation_cone(geometry, d, initial)?.len()))
        .collect()
}

/// True iff the cone of U^dag B U after `depth` layers is disjoint from the
/// measurement support. True certifies C^2 = 1; false proves nothing.
pub fn commutes_by_lightcone(
    geometry: &GridGeometry,
    depth: usize,
    butterfly: &PauliString,
    measurement: &PauliString,
) -> Result<bool> {
    measurement.check_in_range(geometry.n_qubits())?;
    let cone = conjugation_cone(geometry, depth, &support_of(butterfly))?;
    Ok(measurement.sites().all(|s| !cone.contains(&s)))
}

/// Smallest depth at which the butterfly cone reaches the measurement
/// support; `None` if it never does (saturated cone stays disjoint).
///
/// Runs the equivalent forward propagation of M (reachability paths are the
/// same traversed from the other end), which grows incrementally with depth.
pub fn min_connecting_depth(
    geometry: &GridGeometry,
    butterfly: &PauliString,
    measurement: &PauliString,
) -> Result<Option<usize>> {
    let n = geometry.n_qubits();
    butterfly.check_in_range(n)?;
    if butterfly.is_empty() {
        return Err(Error::InvalidOperator("butterfly operator is empty".into()));
    }
    let b_sites = support_of(butterfly);
    let mut support = support_of(measurement);
    if support.is_empty() {
        return Err(Error::InvalidOperator(
            "measurement operator is empty".into(),
        ));
    }
    for &site in &support {
        if site >= n {
            return Err(Error::SiteOutOfRange { site, n });
        }
    }
    if support.intersection(&b_sites).next().is_some() {
        return Ok(Some(0));
    }
    let mut depth = 0usize;
    let mut stagnant = 0usize;
    loop {
        let pattern = layer_pattern(geometry, BrickworkPhase::for_layer(depth));
        let before = support.len();
        support = propagate_support(geometry, std::slice::from_ref(&pattern), &support)?;
        depth += 1;
        if support.intersection(&b_sites).next().is_some() {
            return Ok(Some(depth));
        }
        if support.len() == before {
            stagnant += 1;
            // a full brickwork cycle without growth means saturation
            if stagnant >= 4 {
                return Ok(None);
            }
        } else {
            stagnant = 0;
        }
    }
}
