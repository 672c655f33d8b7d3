//! Two-chart discretization of the sphere.
//!
//! The plane is covered by the unit disk (chart A, flat metric mass d²x) and
//! the inversion image of the disk (chart B, parametrized by the preimage
//! u with x = 1/ū; the metric mass g(x)d²x of an image cell equals the flat
//! preimage mass). Around every insertion with positive weight, and around
//! the chart-B origin when weight sits at infinity, the base grid is replaced
//! by polar refinement rings whose radii halve per octave, subdivided so the
//! γα-power of the local singular factor varies by less than 10% per cell.

use crate::params::Insertion;
use num_complex::Complex64;

/// One quadrature cell of the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Cell center (or kept-region centroid) in the plane.
    pub center: Complex64,
    /// g-measure of the cell.
    pub mass: f64,
    /// Regularization radius: half the smaller cell extent.
    pub eps: f64,
    /// Circle-average variance ln(1/eps) + 2·avg ln|·|₊.
    pub var: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Chart {
    Plane,
    Preimage,
}

#[derive(Debug, Clone)]
struct Site {
    chart: Chart,
    /// Chart coordinates of the singular point (u-coordinates on Preimage).
    center: Complex64,
    /// Refinement disk radius in chart coordinates.
    r0: f64,
    /// γ·α of the local singular factor.
    galpha: f64,
    /// True for the point at infinity (chart-B origin).
    at_infinity: bool,
}

impl Site {
    /// x-space disk (center, radius) occupied by this site's refinement
    /// region; radius is measured from `x_center`. The infinity site returns
    /// the exterior |x| > 1/r0 encoded with an infinite radius.
    fn x_disk(&self) -> (Complex64, f64) {
        match self.chart {
            Chart::Plane => (self.center, self.r0),
            Chart::Preimage => {
                if self.at_infinity {
                    (Complex64::new(0.0, 0.0), f64::INFINITY)
                } else {
                    let d = self.center.norm_sqr() - self.r0 * self.r0;
                    (self.center / d, self.r0 / d)
                }
            }
        }
    }

    fn contains_plane_point(&self, x: Complex64) -> bool {
        match self.chart {
            Chart::Plane => (x - self.center).norm() < self.r0,
            Chart::Preimage => {
                // Chart-B regions live strictly outside the unit circle.
                let r = x.norm();
                if r <= 1.0 {
                    return false;
                }
                let u = 1.0 / x.conj();
                (u - self.center).norm() < self.r0
            }
        }
    }
}

pub(crate) struct GridConfig {
    pub resolution: u32,
    pub gamma: f64,
}

fn ln_abs_plus(x: Complex64) -> f64 {
    x.norm().max(1.0).ln()
}

fn g_metric(x: Complex64) -> f64 {
    let r = x.norm();
    if r <= 1.0 {
        1.0
    } else {
        1.0 / (r * r * r * r)
    }
}

/// Average of ln|·|₊ over the regularization circle; reduces to ln|x|₊ when
/// the circle stays on one side of the unit circle.
fn circle_avg_ln_plus(center: Complex64, eps: f64) -> f64 {
    let r = center.norm();
    if (r - 1.0).abs() >= eps {
        return ln_abs_plus(center);
    }
    let n = 64;
    let mut acc = 0.0;
    for k in 0..n {
        let th = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        acc += ln_abs_plus(center + Complex64::from_polar(eps, th));
    }
    acc / n as f64
}

fn make_cell(center: Complex64, mass: f64, eps: f64) -> Cell {
    let var = (1.0 / eps).ln() + 2.0 * circle_avg_ln_plus(center, eps);
    Cell {
        center,
        mass,
        eps,
        var,
    }
}

/// Subsample a polar rectangle around `origin` (chart coordinates), mapping
/// each point to the plane, and return (kept g-mass, kept centroid, total
/// g-mass). A point is kept when it lies in no site disk other than `own`.
#[allow(clippy::too_many_arguments)]
fn subsample_polar(
    origin: Complex64,
    r_lo: f64,
    r_hi: f64,
    th_lo: f64,
    th_hi: f64,
    chart: Chart,
    sites: &[Site],
    own: Option<usize>,
    nsub: usize,
) -> (f64, Complex64, f64) {
    let flat = 0.5 * (th_hi - th_lo) * (r_hi * r_hi - r_lo * r_lo);
    let mut kept = 0.0;
    let mut total = 0.0;
    let mut cx = Complex64::new(0.0, 0.0);
    let w = flat / (nsub * nsub) as f64;
    for a in 0..nsub {
        // Equal flat area in the radial direction: uniform in r².
        let f = (a as f64 + 0.5) / nsub as f64;
        let r = (r_lo * r_lo + f * (r_hi * r_hi - r_lo * r_lo)).sqrt();
        for b in 0..nsub {
            let th = th_lo + (b as f64 + 0.5) / nsub as f64 * (th_hi - th_lo);
            let p = origin + Complex64::from_polar(r, th);
            let (x, gm) = match chart {
                Chart::Plane => (p, w * g_metric(p)),
                // Preimage flat mass is exactly the image g-mass.
                Chart::Preimage => (1.0 / p.conj(), w),
            };
            total += gm;
            let excluded = sites
                .iter()
                .enumerate()
                .any(|(k, s)| Some(k) != own && s.contains_plane_point(x));
            if !excluded {
                kept += gm;
                cx += x * gm;
            }
        }
    }
    let centroid = if kept > 0.0 {
        cx / kept
    } else {
        Complex64::new(0.0, 0.0)
    };
    (kept, centroid, total)
}

/// Builds the refinement sites for the given insertions.
fn build_sites(cfg: &GridConfig, insertions: &[Insertion], alpha_infinity: f64) -> Vec<Site> {
    let mut sites = Vec::new();
    for ins in insertions {
        if ins.alpha <= 0.0 {
            // A nonpositive weight gives |x−z|^{−γα} with nonnegative
            // exponent: smooth, no refinement wanted.
            continue;
        }
        if ins.z.norm() <= 2.0 {
            sites.push(Site {
                chart: Chart::Plane,
                center: ins.z,
                r0: 0.35,
                galpha: cfg.gamma * ins.alpha,
                at_infinity: false,
            });
        } else {
            let u = 1.0 / ins.z.conj();
            sites.push(Site {
                chart: Chart::Preimage,
                center: u,
                r0: (0.3 * (1.0 - u.norm())).min(0.45 * u.norm()),
                galpha: cfg.gamma * ins.alpha,
                at_infinity: false,
            });
        }
    }
    if alpha_infinity > 0.0 {
        sites.push(Site {
            chart: Chart::Preimage,
            center: Complex64::new(0.0, 0.0),
            r0: 0.35,
            galpha: cfg.gamma * alpha_infinity,
            at_infinity: true,
        });
    }

    // Shrink radii until the refinement regions are pairwise disjoint with a
    // safety gap; same-chart pairs in chart coordinates, cross-chart pairs
    // through their plane disks.
    for _ in 0..6 {
        let n = sites.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (sites[i].clone(), sites[j].clone());
                let scale = if a.chart == b.chart {
                    let d = (a.center - b.center).norm();
                    let need = a.r0 + b.r0;
                    if need > 0.85 * d {
                        0.85 * d / need
                    } else {
                        1.0
                    }
                } else {
                    let (ca, ra) = a.x_disk();
                    let (cb, rb) = b.x_disk();
                    if ra.is_infinite() || rb.is_infinite() {
                        // Exterior region vs a finite disk: keep the disk
                        // well inside |x| < 1/r0(∞).
                        let (fin_c, fin_r, inf_idx, fin_idx) = if ra.is_infinite() {
                            (cb, rb, i, j)
                        } else {
                            (ca, ra, j, i)
                        };
                        let reach = fin_c.norm() + fin_r;
                        let boundary = 1.0 / sites[inf_idx].r0;
                        if reach > 0.85 * boundary {
                            // Shrink both: the finite disk and the exterior.
                            sites[fin_idx].r0 *= 0.8;
                            sites[inf_idx].r0 *= 0.8;
                        }
                        continue;
                    } else {
                        let d = (ca - cb).norm();
                        let need = ra + rb;
                        if need > 0.85 * d {
                            0.85 * d / need
                        } else {
                            1.0
                        }
                    }
                };
                if scale < 1.0 {
                    sites[i].r0 *= scale;
                    sites[j].r0 *= scale;
                }
            }
        }
    }
    sites
}

/// Base grid for one chart: concentric rings with near-square cells, minus
/// the parts falling in a refinement region.
fn base_chart_cells(cfg: &GridConfig, chart: Chart, sites: &[Site], cells: &mut Vec<Cell>) {
    let n_r = (0.4 * cfg.resolution as f64).round().max(6.0) as usize;
    let dr = 1.0 / n_r as f64;
    for i in 0..n_r {
        let r_lo = i as f64 * dr;
        let r_hi = r_lo + dr;
        let r_mid = 0.5 * (r_lo + r_hi);
        let n_th = ((2.0 * std::f64::consts::PI * r_mid / dr).round() as usize).max(8);
        let dth = 2.0 * std::f64::consts::PI / n_th as f64;
        for j in 0..n_th {
            let th_lo = j as f64 * dth;
            let th = th_lo + 0.5 * dth;
            let u = Complex64::from_polar(r_mid, th);
            let (x, flat_mass) = match chart {
                Chart::Plane => (u, 0.5 * dth * (r_hi * r_hi - r_lo * r_lo)),
                Chart::Preimage => (1.0 / u.conj(), 0.5 * dth * (r_hi * r_hi - r_lo * r_lo)),
            };
            // Coarse proximity test against every site disk.
            let diag = match chart {
                Chart::Plane => dr.hypot(r_mid * dth),
                Chart::Preimage => dr.hypot(r_mid * dth) / (r_mid * r_mid),
            };
            let mut near = false;
            let mut inside_all_out = true;
            for s in sites {
                let (c, rad) = s.x_disk();
                let d = if rad.is_infinite() {
                    // Exterior region |x| > boundary.
                    let boundary = 1.0 / s.r0;
                    boundary - x.norm()
                } else {
                    (x - c).norm() - rad
                };
                if d < diag {
                    near = true;
                }
                if d < -diag {
                    inside_all_out = false;
                }
            }
            if !near {
                let eps = 0.5
                    * match chart {
                        Chart::Plane => dr.min(r_mid * dth),
                        Chart::Preimage => dr.min(r_mid * dth) / (r_mid * r_mid),
                    };
                cells.push(make_cell(x, flat_mass, eps));
                continue;
            }
            if !inside_all_out {
                // Deep inside a refinement region: covered by its rings.
                continue;
            }
            // Boundary cell: keep the part outside every region.
            let (kept, centroid, _) = subsample_polar(
                Complex64::new(0.0, 0.0),
                r_lo,
                r_hi,
                th_lo,
                th_lo + dth,
                chart,
                sites,
                None,
                20,
            );
            if kept > 1e-6 * flat_mass {
                let eps = 0.5
                    * match chart {
                        Chart::Plane => dr.min(r_mid * dth),
                        Chart::Preimage => dr.min(r_mid * dth) / (r_mid * r_mid),
                    };
                cells.push(make_cell(centroid, kept, eps));
            }
        }
    }
}

/// Refinement rings for one site.
fn site_cells(cfg: &GridConfig, sites: &[Site], idx: usize, cells: &mut Vec<Cell>) {
    let site = &sites[idx];
    let n_r = (0.4 * cfg.resolution as f64).round().max(6.0) as usize;
    let d_base = 1.0 / n_r as f64;
    // Local base cell size in chart coordinates at the site.
    let d_loc = match site.chart {
        Chart::Plane => d_base * site.center.norm().max(1.0).powi(2).min(4.0),
        Chart::Preimage => d_base,
    };
    let res2 = (cfg.resolution as f64 * cfg.resolution as f64).recip();
    let r_floor = res2.min(site.r0 / 8.0);
    let octaves = (site.r0 / r_floor).log2().ceil().max(1.0) as usize;
    // Radial subdivision: per-cell radius ratio q satisfies q^{γα} ≤ 1.1.
    let m_r = ((site.galpha * std::f64::consts::LN_2 / 0.1_f64.ln_1p()).ceil() as usize)
        .clamp(1, 40);

    let mut r_hi = site.r0;
    for j in 0..octaves {
        let r_next = r_hi * 0.5;
        let m_a = ((2.0 * std::f64::consts::PI * r_hi / d_loc).round() as usize).clamp(8, 64);
        let dth = 2.0 * std::f64::consts::PI / m_a as f64;
        let step = 0.5_f64.powf(1.0 / m_r as f64);
        let mut r_out = r_hi;
        for _ in 0..m_r {
            let r_in = r_out * step;
            let r_mid = 0.5 * (r_in + r_out);
            for a in 0..m_a {
                let th_lo = a as f64 * dth;
                let th = th_lo + 0.5 * dth;
                let p = site.center + Complex64::from_polar(r_mid, th);
                let (x, eps) = match site.chart {
                    Chart::Plane => (p, 0.5 * (r_out - r_in).min(r_mid * dth)),
                    Chart::Preimage => {
                        let scale = p.norm_sqr();
                        (1.0 / p.conj(), 0.5 * (r_out - r_in).min(r_mid * dth) / scale)
                    }
                };
                let mass = match site.chart {
                    Chart::Preimage => 0.5 * dth * (r_out * r_out - r_in * r_in),
                    Chart::Plane => {
                        // Exact flat mass inside the disk; numeric g average
                        // when the cell touches or crosses the unit circle.
                        let flat = 0.5 * dth * (r_out * r_out - r_in * r_in);
                        let reach = site.center.norm() + r_out;
                        if reach <= 1.0 {
                            flat
                        } else {
                            let (m, _, _) = subsample_polar(
                                site.center,
                                r_in,
                                r_out,
                                th_lo,
                                th_lo + dth,
                                Chart::Plane,
                                &[],
                                None,
                                12,
                            );
                            m
                        }
                    }
                };
                cells.push(make_cell(x, mass, eps));
            }
            r_out = r_in;
        }
        r_hi = r_next;
        let _ = j;
    }
}

/// Builds all cells for the given insertions and infinity weight.
pub(crate) fn build_cells(
    cfg: &GridConfig,
    insertions: &[Insertion],
    alpha_infinity: f64,
) -> Vec<Cell> {
    let sites = build_sites(cfg, insertions, alpha_infinity);
    let mut cells = Vec::new();
    base_chart_cells(cfg, Chart::Plane, &sites, &mut cells);
    base_chart_cells(cfg, Chart::Preimage, &sites, &mut cells);
    for idx in 0..sites.len() {
        site_cells(cfg, &sites, idx, &mut cells);
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_grid_mass_is_sphere_mass() {
        // ∫ g = ∫_{|x|≤1} d²x + ∫_{|x|>1} |x|^{−4} d²x = π + π.
        let cfg = GridConfig {
            resolution: 64,
            gamma: 1.0,
        };
        let cells = build_cells(&cfg, &[], 0.0);
        let total: f64 = cells.iter().map(|c| c.mass).sum();
        let expect = 2.0 * std::f64::consts::PI;
        assert!(
            (total - expect).abs() / expect < 1e-12,
            "total mass {total}"
        );
    }

    #[test]
    fn refined_grid_mass_still_matches() {
        let cfg = GridConfig {
            resolution: 48,
            gamma: 1.0,
        };
        let ins = [
            Insertion::at(1.8, 0.0, 0.0),
            Insertion::at(1.8, 1.0, 0.0),
        ];
        let cells = build_cells(&cfg, &ins, 1.8);
        let total: f64 = cells.iter().map(|c| c.mass).sum();
        let expect = 2.0 * std::f64::consts::PI;
        // The omitted cores below the floor radius cost O(res⁻⁴).
        assert!(
            (total - expect).abs() / expect < 1e-3,
            "total mass {total} vs {expect}"
        );
    }

    #[test]
    fn refinement_reaches_the_floor() {
        let cfg = GridConfig {
            resolution: 48,
            gamma: 1.0,
        };
        let z = Complex64::new(1.0, 0.0);
        let cells = build_cells(&cfg, &[Insertion::at(1.8, 1.0, 0.0)], 0.0);
        let nearest = cells
            .iter()
            .map(|c| (c.center - z).norm())
            .fold(f64::INFINITY, f64::min);
        let floor = (48.0f64 * 48.0).recip();
        assert!(nearest < 2.0 * floor, "nearest cell at {nearest}");
        // And the closest cells are small.
        let small = cells
            .iter()
            .filter(|c| (c.center - z).norm() < 2.0 * floor)
            .all(|c| c.eps < 2.0 * floor);
        assert!(small);
    }

    #[test]
    fn construction_is_deterministic() {
        let cfg = GridConfig {
            resolution: 32,
            gamma: 1.3,
        };
        let ins = [Insertion::at(1.5, 0.0, 0.0), Insertion::at(1.2, 1.0, 0.0)];
        let a = build_cells(&cfg, &ins, 1.1);
        let b = build_cells(&cfg, &ins, 1.1);
        assert_eq!(a, b);
    }

    #[test]
    fn far_insertion_lands_in_preimage_chart() {
        let cfg = GridConfig {
            resolution: 32,
            gamma: 1.0,
        };
        let z = Complex64::new(10.0, 0.0);
        let cells = build_cells(&cfg, &[Insertion::at(1.8, 10.0, 0.0)], 0.0);
        let nearest = cells
            .iter()
            .map(|c| (c.center - z).norm())
            .fold(f64::INFINITY, f64::min);
        // Floor in preimage units ~ res⁻², magnified by |z|² ≈ 100.
        assert!(nearest < 0.05, "nearest {nearest}");
        let total: f64 = cells.iter().map(|c| c.mass).sum();
        let expect = 2.0 * std::f64::consts::PI;
        assert!((total - expect).abs() / expect < 1e-3);
    }
}
