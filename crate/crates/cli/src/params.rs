//! Per-subcommand parameters.
//!
//! Each block declares a clap argument struct (every field optional) and a
//! resolved parameter struct with defaults. Config-file tables use the
//! snake_case field names; flags use the kebab-case form.

use std::f64::consts::PI;

use clap::Args;
use serde::{Deserialize, Serialize};

macro_rules! params {
    (
        $args:ident => $params:ident {
            $( $(#[$attr:meta])* $name:ident : $ty:ty = $default:expr, )*
        }
        $( optional { $( $(#[$oattr:meta])* $oname:ident : $oty:ty, )* } )?
    ) => {
        #[derive(Args, Debug, Clone, Default, Serialize)]
        pub struct $args {
            $( #[arg(long)] $(#[$attr])* pub $name: Option<$ty>, )*
            $( $( #[arg(long)] $(#[$oattr])* pub $oname: Option<$oty>, )* )?
        }

        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $params {
            $( pub $name: $ty, )*
            $( $( pub $oname: Option<$oty>, )* )?
        }

        impl Default for $params {
            fn default() -> Self {
                $params {
                    $( $name: $default, )*
                    $( $( $oname: None, )* )?
                }
            }
        }
    };
}

params! {
    BracketArgs => BracketParams {
        /// Left operand, e.g. "q1*p1^2"
        f: String = String::new(),
        /// Right operand
        g: String = String::new(),
        /// 0 for the full bracket; k > 0 for the single term f D^k g
        order: u32 = 0,
        /// poisson, moyal or symbolic
        spec: String = "moyal".into(),
        /// Number of quantum terms kept by moyal/symbolic brackets
        terms: u32 = 3,
        /// Expression used for hbar in the moyal bracket
        hbar: String = "hbar".into(),
    }
}

params! {
    SpectraArgs => SpectraParams {
        /// energy, angular or gh
        family: String = "energy".into(),
        /// Number of members: levels 1..n, m = -n..n, or levels 1..n of g_H (0 picks the family default)
        n: u32 = 0,
        /// Points along x (or per axis for gh)
        samples: usize = 1001,
        /// Energy axis units: natural (E_n = -1/(2n^2)) or scaled (E_n = -1/n^2)
        units: String = "natural".into(),
    }
    optional {
        /// Lower end of x (for gh: unused)
        x_min: f64,
        /// Upper end of x (for gh: unused)
        x_max: f64,
        /// Largest |q| for gh
        q_max: f64,
        /// Largest |p| for gh
        p_max: f64,
    }
}

params! {
    ScanArgs => ScanParams {
        /// Position widths, comma separated
        #[arg(value_delimiter = ',')]
        sigma_q: Vec<f64> = (1..=16).map(|k| 0.25 * k as f64).collect(),
        /// Momentum widths, comma separated
        #[arg(value_delimiter = ',')]
        sigma_p: Vec<f64> = vec![0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
        /// Absolute quadrature tolerance per cell
        tol: f64 = 1e-10,
    }
}

params! {
    GroundArgs => GroundParams {
        /// Bisection tolerance on sigma
        tol: f64 = 1e-12,
    }
}

params! {
    ZeemanArgs => ZeemanParams {
        /// Largest level examined
        n_max: u64 = 4,
        /// Random support samples per level
        samples: usize = 200_000,
        seed: u64 = 40,
    }
}

params! {
    EvolveArgs => EvolveParams {
        n_q: usize = 512,
        n_p: usize = 512,
        /// q_min,q_max,p_min,p_max
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        bounds: Vec<f64> = vec![-8.0, 8.0, -14.0, 14.0],
        /// Coefficient of the hbar^2 term (0 classical, -1/24 Moyal)
        #[arg(allow_negative_numbers = true)]
        a1: f64 = 0.0,
        hbar: f64 = 1.0,
        /// Fraction of the stable step
        cfl: f64 = 0.9,
        /// wedge or constant
        schedule: String = "wedge".into(),
        /// Wedge peak coupling
        #[arg(allow_negative_numbers = true)]
        peak: f64 = 1.0 / 3.0,
        /// Constant coupling
        #[arg(allow_negative_numbers = true)]
        lambda: f64 = 0.0,
        t_end: f64 = PI / 4.0,
        /// Largest accepted ring/max ratio of |rho|
        boundary_tol: f64 = 1e-10,
    }
    optional {
        /// Fixed time step (overrides cfl)
        dt: f64,
    }
}

params! {
    ExciteArgs => ExciteParams {
        /// Time samples over [0, t_max]
        samples: usize = 200,
        t_max: f64 = 6.0,
        omega: f64 = 0.375,
        tol: f64 = 1e-13,
    }
    optional {
        /// Field strength eE (default omega^2)
        amplitude: f64,
    }
}

params! {
    ScatterArgs => ScatterParams {
        n_particles: usize = 100_000,
        seed: u64 = 12,
        p0: f64 = 1.0,
        b_max: f64 = 4.0,
        /// Bin edges in degrees, comma separated
        #[arg(value_delimiter = ',')]
        edges_deg: Vec<f64> = (3..=15).map(|d| 10.0 * d as f64).collect(),
        /// Start radius in units of kappa mu / p0^2
        radius: f64 = 1e5,
        rtol: f64 = 1e-11,
        atol: f64 = 1e-12,
        /// attractive or repulsive
        interaction: String = "attractive".into(),
    }
}

params! {
    VerifyArgs => VerifyParams {
        /// Criteria to run, comma separated (default all)
        #[arg(value_delimiter = ',')]
        only: Vec<u32> = Vec::new(),
    }
}
