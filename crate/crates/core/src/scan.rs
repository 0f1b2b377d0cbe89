//! Condition masks over a grid of designed singularity locations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::params::BaseParams;
use crate::singularity::{design_singularity, normal_form, CaseTag, SingularityReport};

/// Names of the individual masks, in output order.
pub const MASK_NAMES: [&str; 7] = ["kmm_pos", "kpp_neg", "j1_neg", "j2_neg", "det_pos", "k2_pos", "kappa_pos"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanWindow {
    pub r_min: f64,
    pub r_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl Default for ScanWindow {
    fn default() -> Self {
        ScanWindow { r_min: 0.01, r_max: 0.6, omega_min: -2.0, omega_max: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Masks {
    pub kmm_pos: bool,
    pub kpp_neg: bool,
    pub j1_neg: bool,
    pub j2_neg: bool,
    pub det_pos: bool,
    pub k2_pos: bool,
    pub kappa_pos: bool,
}

impl Masks {
    pub fn values(&self) -> [bool; 7] {
        [self.kmm_pos, self.kpp_neg, self.j1_neg, self.j2_neg, self.det_pos, self.k2_pos, self.kappa_pos]
    }

    pub fn combined(&self) -> bool {
        self.values().iter().all(|&b| b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub r_star: f64,
    pub omega_star: f64,
    /// `None` marks an invalid cell (designer failure or non-finite constants).
    pub masks: Option<Masks>,
    pub report: Option<SingularityReport>,
    pub k2: Option<f64>,
    pub kappa: Option<f64>,
    pub error: Option<String>,
}

impl Cell {
    pub fn combined(&self) -> Option<bool> {
        self.masks.map(|m| m.combined())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub r_axis: Vec<f64>,
    pub omega_axis: Vec<f64>,
    /// Row-major: `cells[i * r_axis.len() + j]` is `(r_axis[j], omega_axis[i])`.
    pub cells: Vec<Cell>,
}

impl ScanResult {
    pub fn cell(&self, i_omega: usize, j_r: usize) -> &Cell {
        &self.cells[i_omega * self.r_axis.len() + j_r]
    }

    /// Cell whose node is closest to `(r, omega)`.
    pub fn nearest(&self, r: f64, omega: f64) -> &Cell {
        self.cells
            .iter()
            .min_by(|a, b| {
                let da = (a.r_star - r).hypot(a.omega_star - omega);
                let db = (b.r_star - r).hypot(b.omega_star - omega);
                da.total_cmp(&db)
            })
            .expect("scan has at least one cell")
    }
}

/// Evaluates the designer and the classification at one grid node.
pub fn evaluate_cell(r_star: f64, omega_star: f64, base: &BaseParams) -> Cell {
    let mut cell = Cell { r_star, omega_star, masks: None, report: None, k2: None, kappa: None, error: None };
    let design = match design_singularity(r_star, omega_star, base) {
        Ok(d) => d,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    let p = match base.with_design(design.k2, design.kappa) {
        Ok(p) => p,
        Err(e) => {
            cell.error = Some(e.to_string());
            return cell;
        }
    };
    let rep = normal_form(&design.x_star, &p);
    let finite = [rep.kpp, rep.kpm, rep.kmp, rep.kmm, rep.j1, rep.j2].iter().all(|x| x.is_finite());
    if !finite {
        cell.error = Some("non-finite curvature constants".into());
        return cell;
    }
    cell.masks = Some(Masks {
        kmm_pos: rep.kmm > 0.0,
        kpp_neg: rep.kpp < 0.0,
        j1_neg: rep.j1 < 0.0,
        j2_neg: rep.j2 < 0.0,
        det_pos: rep.j1 * rep.j2 - 1.0 > 0.0,
        k2_pos: design.k2 > 0.0,
        kappa_pos: design.kappa > 0.0,
    });
    cell.report = Some(rep);
    cell.k2 = Some(design.k2);
    cell.kappa = Some(design.kappa);
    cell
}

fn nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// Scans an `n x n` grid of nodes spanning `window` (both ends included).
pub fn scan(base: &BaseParams, window: &ScanWindow, n: usize) -> ScanResult {
    let r_axis = nodes(window.r_min, window.r_max, n.max(1));
    let omega_axis = nodes(window.omega_min, window.omega_max, n.max(1));
    let coords: Vec<(f64, f64)> =
        omega_axis.iter().flat_map(|&w| r_axis.iter().map(move |&r| (r, w))).collect();
    let cells = coords.par_iter().map(|&(r, w)| evaluate_cell(r, w, base)).collect();
    ScanResult { r_axis, omega_axis, cells }
}

/// True when every combined cell classifies as case 1.
pub fn combined_cells_are_case1(result: &ScanResult) -> bool {
    result
        .cells
        .iter()
        .filter(|c| c.combined() == Some(true))
        .all(|c| c.report.map(|r| r.case_tag) == Some(CaseTag::Case1))
}
