//! Fragmentation-kernel gallery: masses, scaled moments, middle-interval
//! mass and the shattering envelope for every built-in kernel family.
//!
//! ```bash
//! cargo run --release --example kernel_gallery
//! ```

use growfrag::audit::{middle_mass_bound, middle_probe_width};
use growfrag::KernelSpec;

fn row(name: &str, kernel: &KernelSpec) {
    let m0 = kernel.moment(1.0, 0).unwrap();
    let m1 = kernel.moment(1.0, 1).unwrap();
    let m2 = kernel.moment(1.0, 2).unwrap();
    let middle = middle_probe_width(kernel)
        .map(|eta| format!("{:.4} @ eta={eta:.4}", middle_mass_bound(kernel, eta)))
        .unwrap_or_else(|| "n/a (gamma = 0)".into());
    println!(
        "{name:<24} m0={m0:.3} m1={m1:.3} m2={m2:.6}  gamma={:.2} C={:.3}  middle mass {middle}",
        kernel.gamma(),
        kernel.shattering_constant(),
    );
}

fn main() {
    row("uniform", &KernelSpec::uniform());
    row("equal mitosis", &KernelSpec::equal_mitosis());
    row("mitosis r=0.3", &KernelSpec::mitosis(0.3).unwrap());
    row("renewal (r=0)", &KernelSpec::renewal());
    row(
        "homogeneous alpha=2",
        &KernelSpec::homogeneous(2.0).unwrap(),
    );
    row(
        "depolymerising a=-0.7",
        &KernelSpec::homogeneous(-0.7).unwrap(),
    );
    let mix = KernelSpec::mixture(
        0.5,
        KernelSpec::renewal(),
        KernelSpec::mitosis(0.25).unwrap(),
    )
    .unwrap();
    row("renewal/mitosis mix", &mix);

    // the convex-combination identity for the second moment:
    // rho/2 + (1-rho)(r^2 + (1-r)^2)/2 = (1 - 2 r (1-r)(1-rho)) / 2
    let (r, rho) = (0.25, 0.5);
    let expected = 0.5 * (1.0 - 2.0 * r * (1.0 - r) * (1.0 - rho));
    println!(
        "\nmixture identity: m2 = {:.12}, closed form {:.12}",
        mix.moment(1.0, 2).unwrap(),
        expected
    );

    // masses of sub-intervals stay partition-additive with half-open cells
    let k = KernelSpec::equal_mitosis();
    println!(
        "atom placement: mass[0.9, 1.1) of kappa(., 2) = {}",
        k.mass(2.0, 0.9, 1.1).unwrap()
    );
}
