//! Ray intersection with untrimmed analytic surfaces.

use num_complex::Complex64;

use crate::brep::{AnalyticSurface, Shape, Vec3};

use super::Ray;

/// Relative discriminant below which a quadratic root pair counts as tangency.
pub const TANGENCY_TOL: f64 = 1e-12;
/// Residual accepted for polished torus roots.
pub const QUARTIC_RESIDUAL: f64 = 1e-9;

/// Real roots of `a t² + b t + c`, ascending; tangential double roots are dropped.
fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-14 * scale {
        return if b.abs() > 1e-14 * scale { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc <= TANGENCY_TOL * (b * b + (4.0 * a * c).abs()) {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (t1, t2) = if q == 0.0 {
        let r = (-c / a).sqrt();
        (-r, r)
    } else {
        (q / a, c / q)
    };
    if t1 <= t2 {
        vec![t1, t2]
    } else {
        vec![t2, t1]
    }
}

fn horner(coeffs: &[f64], t: f64) -> (f64, f64) {
    // value and derivative; coefficients from highest degree down
    let mut f = 0.0;
    let mut df = 0.0;
    for &c in coeffs {
        df = df * t + f;
        f = f * t + c;
    }
    (f, df)
}

/// Real roots of the monic quartic `t⁴ + c[0] t³ + c[1] t² + c[2] t + c[3]`
/// via Durand–Kerner iteration followed by Newton polishing.
pub fn quartic_real_roots(c: [f64; 4]) -> Vec<f64> {
    let coeffs = [1.0, c[0], c[1], c[2], c[3]];
    let eval = |z: Complex64| coeffs.iter().fold(Complex64::new(0.0, 0.0), |acc, &k| acc * z + k);
    let bound = 1.0 + c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..4).map(|k| seed.powu(k as u32) * bound).collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for k in 0..4 {
            let mut denom = Complex64::new(1.0, 0.0);
            for m in 0..4 {
                if m != k {
                    denom *= roots[k] - roots[m];
                }
            }
            if denom.norm() == 0.0 {
                denom = Complex64::new(1e-30, 0.0);
            }
            let step = eval(roots[k]) / denom;
            roots[k] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * bound {
            break;
        }
    }
    let mut out: Vec<f64> = Vec::new();
    for z in roots {
        if z.im.abs() > 1e-5 * (1.0 + z.re.abs()) {
            continue;
        }
        let mut t = z.re;
        for _ in 0..60 {
            let (f, df) = horner(&coeffs, t);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            t -= step;
            if step.abs() <= 1e-16 * (1.0 + t.abs()) {
                break;
            }
        }
        if horner(&coeffs, t).0.abs() < QUARTIC_RESIDUAL && !out.iter().any(|r| (r - t).abs() < 1e-9) {
            out.push(t);
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

/// All intersections `(t, u, v)` with `t ≥ ray.t_min`, ascending in `t`.
/// Parameters are wrapped into the surface domain where periodicity allows.
pub fn intersect_ray_surface(surface: &AnalyticSurface, ray: &Ray) -> Vec<(f64, f64, f64)> {
    let pl = &surface.placement;
    let o = pl.to_local(&ray.origin);
    let d = pl.dir_to_local(&ray.direction);
    let ts: Vec<f64> = match surface.shape {
        Shape::Plane => {
            if d.z.abs() < 1e-15 {
                Vec::new()
            } else {
                vec![-o.z / d.z]
            }
        }
        Shape::Cylinder { radius } => quadratic(
            d.x * d.x + d.y * d.y,
            2.0 * (o.x * d.x + o.y * d.y),
            o.x * o.x + o.y * o.y - radius * radius,
        ),
        Shape::Cone { radius, semi_angle } => {
            let k = semi_angle.tan();
            let rho0 = radius + o.z * k;
            quadratic(
                d.x * d.x + d.y * d.y - k * k * d.z * d.z,
                2.0 * (o.x * d.x + o.y * d.y - rho0 * k * d.z),
                o.x * o.x + o.y * o.y - rho0 * rho0,
            )
        }
        Shape::Sphere { radius } => quadratic(d.norm_squared(), 2.0 * o.dot(&d), o.norm_squared() - radius * radius),
        Shape::Torus {
            major_radius: rr,
            minor_radius: r,
        } => {
            let g = d.norm_squared();
            let h = 2.0 * o.dot(&d);
            let i = o.norm_squared() + rr * rr - r * r;
            let k = 4.0 * rr * rr;
            let c4 = g * g;
            let c3 = 2.0 * g * h;
            let c2 = h * h + 2.0 * g * i - k * (d.x * d.x + d.y * d.y);
            let c1 = 2.0 * h * i - 2.0 * k * (o.x * d.x + o.y * d.y);
            let c0 = i * i - k * (o.x * o.x + o.y * o.y);
            quartic_real_roots([c3 / c4, c2 / c4, c1 / c4, c0 / c4])
        }
    };
    let mut out: Vec<(f64, f64, f64)> = ts
        .into_iter()
        .filter(|t| t.is_finite() && *t >= ray.t_min)
        .map(|t| {
            let p: Vec3 = ray.at(t);
            let (u, v) = surface.invert(&p);
            let (u, v) = surface.wrap_to_domain(u, v, 1e-9);
            (t, u, v)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brep::{Placement, UvDomain};

    fn surface(shape: Shape) -> AnalyticSurface {
        AnalyticSurface::new(shape, Placement::canonical(), UvDomain::new(0.0, 1.0, 0.0, 1.0))
    }

    fn ts(hits: &[(f64, f64, f64)]) -> Vec<f64> {
        hits.iter().map(|h| h.0).collect()
    }

    #[test]
    fn sphere_pair() {
        let ray = Ray::new(Vec3::new(0.0, 0.0, 2.0), Vec3::new(0.0, 0.0, -1.0));
        let hits = intersect_ray_surface(&surface(Shape::Sphere { radius: 1.0 }), &ray);
        let t = ts(&hits);
        assert_eq!(t.len(), 2);
        assert!((t[0] - 1.0).abs() < 1e-12 && (t[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tangent_ray_from_surface_misses() {
        let ray = Ray::new(Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        assert!(intersect_ray_surface(&surface(Shape::Sphere { radius: 1.0 }), &ray).is_empty());
        assert!(intersect_ray_surface(&surface(Shape::Cylinder { radius: 1.0 }), &ray).is_empty());
    }

    #[test]
    fn torus_cross_section() {
        let s = surface(Shape::Torus {
            major_radius: 2.0,
            minor_radius: 0.5,
        });
        let hits = intersect_ray_surface(&s, &Ray::new(Vec3::zeros(), Vec3::x()));
        let t = ts(&hits);
        assert_eq!(t.len(), 2, "{t:?}");
        assert!((t[0] - 1.5).abs() < 1e-12 && (t[1] - 2.5).abs() < 1e-12);
        for (t, u, v) in hits {
            assert!((s.point(u, v) - Vec3::new(t, 0.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn quartic_known_roots() {
        // (t - 1)(t + 2)(t² + 1)
        let r = quartic_real_roots([1.0, -1.0, 1.0, -2.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0] + 2.0).abs() < 1e-12 && (r[1] - 1.0).abs() < 1e-12);
        // four distinct real roots 1, 2, 3, 4
        let r = quartic_real_roots([-10.0, 35.0, -50.0, 24.0]);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn cone_and_plane() {
        let cone = surface(Shape::Cone {
            radius: 1.0,
            semi_angle: std::f64::consts::FRAC_PI_4,
        });
        // the cone radius at z is 1 + z; a ray along +x at z = 1 meets it at x = ±2
        let hits = intersect_ray_surface(&cone, &Ray::new(Vec3::new(-5.0, 0.0, 1.0), Vec3::x()));
        let t = ts(&hits);
        assert!((t[0] - 3.0).abs() < 1e-12 && (t[1] - 7.0).abs() < 1e-12, "{t:?}");
        for (t, u, v) in hits {
            assert!((cone.point(u, v) - Vec3::new(-5.0 + t, 0.0, 1.0)).norm() < 1e-9);
        }
        let plane = surface(Shape::Plane);
        let hits = intersect_ray_surface(&plane, &Ray::new(Vec3::new(0.3, 0.4, 2.0), -Vec3::z()));
        assert_eq!(hits, vec![(2.0, 0.3, 0.4)]);
    }
}
