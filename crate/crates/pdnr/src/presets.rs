//! Named parameter sets reproducing the published figures.
//!
//! fig1a/fig1b are the ⟨n⟩(t) traces, fig2a–d the Wigner snapshots at the
//! extrema, fig3a/fig3b the snapshots between extrema and fig4ab/fig4c the
//! second parameter family. The `a`/`b` of fig3 follow the caption (a: Δ = 20,
//! b: Δ = −20).

use std::f64::consts::PI;

use crate::config::{DriveKind, Instant, RunConfig};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> RunConfig,
}

impl Preset {
    pub fn config(&self) -> RunConfig {
        (self.build)()
    }
}

const PERIODS: f64 = 12.0;

fn base(delta: f64, chi: f64, omega: f64, duration: f64, separation: f64) -> RunConfig {
    RunConfig {
        delta,
        chi,
        omega,
        drive: DriveKind::Pulsed,
        pulse_duration: duration,
        pulse_separation: separation,
        t_end: PERIODS * separation,
        ..RunConfig::default()
    }
}

/// Δ = −20 needs ~80 levels; the first pulse then wants a finer step.
fn negative_family() -> RunConfig {
    RunConfig { dim: 80, step: Some(6.25e-5), ..base(-20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0) }
}

fn positive_family() -> RunConfig {
    base(20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0)
}

fn with_instants(mut c: RunConfig, instants: &[Instant]) -> RunConfig {
    c.instants = instants.to_vec();
    c
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "fig1a", description: "<n>(t), negative detuning (chaotic candidate)", build: negative_family },
    Preset { name: "fig1b", description: "<n>(t), positive detuning (regular)", build: positive_family },
    Preset {
        name: "fig2a",
        description: "Wigner at the <n> minimum, negative detuning",
        build: || with_instants(negative_family(), &[Instant::AtMinN]),
    },
    Preset {
        name: "fig2b",
        description: "Wigner at the <n> maximum, negative detuning",
        build: || with_instants(negative_family(), &[Instant::AtMaxN]),
    },
    Preset {
        name: "fig2c",
        description: "Wigner at the <n> minimum, positive detuning",
        build: || with_instants(positive_family(), &[Instant::AtMinN]),
    },
    Preset {
        name: "fig2d",
        description: "Wigner at the <n> maximum, positive detuning",
        build: || with_instants(positive_family(), &[Instant::AtMaxN]),
    },
    Preset {
        name: "fig3a",
        description: "Wigner between the extrema, positive detuning",
        build: || with_instants(positive_family(), &[Instant::AtMidN]),
    },
    Preset {
        name: "fig3b",
        description: "Wigner between the extrema, negative detuning",
        build: || with_instants(negative_family(), &[Instant::AtMidN]),
    },
    Preset {
        name: "fig4ab",
        description: "Wigner at the <n> minimum and maximum, second negative-detuning set",
        build: || {
            let c = RunConfig { dim: 80, ..base(-7.5, 0.5, 10.0, 0.25, 2.0 * PI / 5.0) };
            with_instants(c, &[Instant::AtMinN, Instant::AtMaxN])
        },
    },
    Preset {
        name: "fig4c",
        description: "Wigner at the <n> maximum, regular regime with wide pulse spacing",
        build: || {
            let c = RunConfig { t_end: 8.0 * 2.0 * PI, ..base(15.0, 1.0, 10.0, 0.5, 2.0 * PI) };
            with_instants(c, &[Instant::AtMaxN])
        },
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

pub fn names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (name, Δ/γ, χ/γ, Ω/γ, Tγ, τγ) as printed in the figure captions.
    const CAPTIONS: &[(&str, f64, f64, f64, f64, f64)] = &[
        ("fig1a", -20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig1b", 20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig2a", -20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig2b", -20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig2c", 20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig2d", 20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig3a", 20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig3b", -20.0, 1.0, 20.0, 0.5, 4.0 * PI / 5.0),
        ("fig4ab", -7.5, 0.5, 10.0, 0.25, 2.0 * PI / 5.0),
        ("fig4c", 15.0, 1.0, 10.0, 0.5, 2.0 * PI),
    ];

    #[test]
    fn presets_carry_caption_parameters() {
        assert_eq!(PRESETS.len(), CAPTIONS.len());
        for &(name, delta, chi, omega, t, tau) in CAPTIONS {
            let c = find(name).unwrap_or_else(|| panic!("missing preset {name}")).config();
            assert_eq!((c.delta, c.chi, c.omega), (delta, chi, omega), "{name}");
            assert_eq!((c.pulse_duration, c.pulse_separation), (t, tau), "{name}");
            assert_eq!(c.drive, DriveKind::Pulsed, "{name}");
            assert_eq!((c.gamma, c.n_bath, c.drive_phase), (1.0, 0.0, 0.0), "{name}");
            c.validate().unwrap();
        }
    }

    #[test]
    fn instants_match_panels() {
        let inst = |n: &str| find(n).unwrap().config().instants;
        assert_eq!(inst("fig2a"), vec![Instant::AtMinN]);
        assert_eq!(inst("fig2d"), vec![Instant::AtMaxN]);
        assert_eq!(inst("fig3a"), vec![Instant::AtMidN]);
        assert_eq!(inst("fig4ab"), vec![Instant::AtMinN, Instant::AtMaxN]);
    }

    #[test]
    fn presets_survive_echo() {
        for p in PRESETS {
            let c = p.config();
            assert_eq!(RunConfig::from_text(&c.echo()).unwrap(), c, "{}", p.name);
        }
    }
}
