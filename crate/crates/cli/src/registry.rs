//! Built-in scenarios.

use lpdim::spaces::{ConvolutionKernel, Generator, SubspaceSpec};
use lpdim::{GroupElement, GroupSpec};
use nalgebra::DMatrix;
use serde::Serialize;

/// A named subspace with the grid it is usually run on.
#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: &'static str,
    pub about: &'static str,
    #[serde(with = "lpdim::dimension::exponent")]
    pub p: f64,
    pub windows: Vec<usize>,
    pub eps: Vec<f64>,
    #[serde(skip)]
    pub spec: SubspaceSpec,
}

pub fn difference_kernel() -> ConvolutionKernel {
    ConvolutionKernel::scalar(&GroupSpec::integers(), &[(0, 1.0), (1, -1.0)]).expect("valid kernel")
}

/// `y ↦ y₁ + y₂(· − 1)` from `K²` to `K`.
pub fn generic_row_kernel() -> ConvolutionKernel {
    ConvolutionKernel::new(
        &GroupSpec::integers(),
        vec![
            (GroupElement::integer(0), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])),
            (GroupElement::integer(1), DMatrix::from_row_slice(1, 2, &[0.0, 1.0])),
        ],
    )
    .expect("valid kernel")
}

/// Index of the approximant whose image space the demo scenario estimates.
pub const DEMO_UNIT_INDEX: usize = 4;

const WINDOWS: [usize; 4] = [8, 16, 32, 64];
const EPS: [f64; 3] = [1.0, 0.5, 0.1];

fn entry(name: &'static str, about: &'static str, p: f64, spec: SubspaceSpec) -> Scenario {
    Scenario {
        name,
        about,
        p,
        windows: WINDOWS.to_vec(),
        eps: EPS.to_vec(),
        spec,
    }
}

pub fn scenarios() -> Vec<Scenario> {
    let image = SubspaceSpec::ConvImage(difference_kernel());
    let kernel = SubspaceSpec::ConvKernel(generic_row_kernel());
    let mut list = vec![
        entry("full", "all of ℓ^p(Z; K²); dimension 2", 2.0, SubspaceSpec::Full { dim: 2 }),
        entry("zero", "the zero subspace of ℓ^p(Z)", 2.0, SubspaceSpec::Zero { dim: 1 }),
        entry("conv_kernel", "kernel of the generic 1×2 symbol y₁ + y₂(· − 1); dimension 1", 2.0, kernel.clone()),
        entry("conv_image", "image of convolution by δ₀ − δ₁; dimension 1", 2.0, image.clone()),
        Scenario {
            windows: vec![64, 128, 256, 512],
            eps: vec![0.05],
            ..entry(
                "conv_image_fourier_demo",
                "image of δ₀ − δ₁ at p = 2 against its Fourier symbol count",
                2.0,
                image.clone(),
            )
        },
        entry(
            "cyclic",
            "translates of a truncated geometric generator with tail 0.1 outside [0, 2)",
            2.0,
            SubspaceSpec::CyclicTranslates(Generator::truncated_geometric(2, 5, 0.1).expect("valid generator")),
        ),
        entry("direct_sum", "conv_image ⊕ conv_kernel; dimension 2", 2.0, SubspaceSpec::direct_sum(image.clone(), kernel.clone())),
        Scenario {
            eps: vec![1.5, 1.0, 0.1],
            ..entry("periodic_infty", "3-periodic sequences in ℓ^∞; dimension 0", f64::INFINITY, SubspaceSpec::PeriodicInfty { period: 3 })
        },
        Scenario {
            eps: vec![1.5, 1.0, 0.1],
            ..entry("periodic_union", "closed span of all periodic sequences in ℓ^∞", f64::INFINITY, SubspaceSpec::PeriodicUnion)
        },
        Scenario {
            eps: vec![0.99, 0.5, 0.1],
            ..entry("ker_periodization", "kernel of 2-periodization in ℓ¹; dimension 1", 1.0, SubspaceSpec::KerPeriodization { period: 2 })
        },
        entry("annihilator", "annihilator of conv_image; dimension 0", 2.0, SubspaceSpec::annihilator(image.clone())),
        entry(
            "reduced",
            "conv_image restricted to the subgroup 2Z with fiber K²; dimension 2",
            2.0,
            SubspaceSpec::Reduced { inner: Box::new(image.clone()), index: 2 },
        ),
        entry(
            "induced",
            "conv_kernel induced from 2Z up to Z; dimension 1",
            2.0,
            SubspaceSpec::Induced { inner: Box::new(kernel), index: 2 },
        ),
        Scenario {
            eps: vec![0.99, 0.5, 0.1],
            ..entry(
                "remark91_demo",
                "image of δ₀ − (4/5)δ₂ in ℓ¹, plus the approximate units y_k → δ₀ and their weak approximation bound",
                1.0,
                lpdim::dimension::approx_unit_space(DEMO_UNIT_INDEX),
            )
        },
    ];
    list.sort_by_key(|s| s.name);
    list
}

pub fn find(name: &str) -> Option<Scenario> {
    scenarios().into_iter().find(|s| s.name == name)
}
