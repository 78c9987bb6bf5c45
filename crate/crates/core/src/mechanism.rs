//! Finite local randomizers: row-stochastic kernels from inputs to messages.

use num::{One, Zero};

use crate::dist::DiscreteDistribution;
use crate::numeric::{Extended, Float, NumericMode, Scalar};
use crate::{Error, Result};

/// A local randomizer R: X -> Y as a d x m row-stochastic kernel.
/// Row i is the output distribution of R(x_i).
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism<M: NumericMode> {
    input_labels: Vec<String>,
    output_labels: Vec<String>,
    kernel: Vec<Vec<M::Value>>,
    mode: M,
}

impl<M: NumericMode> Mechanism<M> {
    /// Validates and builds a mechanism; every row must be a distribution
    /// over the output labels.
    pub fn new(
        input_labels: Vec<String>,
        output_labels: Vec<String>,
        kernel: Vec<Vec<M::Value>>,
        mode: M,
    ) -> Result<Self> {
        if input_labels.is_empty() || output_labels.is_empty() {
            return Err(Error::ZeroSize);
        }
        if kernel.len() != input_labels.len() {
            return Err(Error::LengthMismatch {
                labels: input_labels.len(),
                probs: kernel.len(),
            });
        }
        for row in &kernel {
            if row.len() != output_labels.len() {
                return Err(Error::LengthMismatch {
                    labels: output_labels.len(),
                    probs: row.len(),
                });
            }
            crate::dist::validate_probs(&mode, row)?;
        }
        Ok(Mechanism {
            input_labels,
            output_labels,
            kernel,
            mode,
        })
    }

    pub fn input_labels(&self) -> &[String] {
        &self.input_labels
    }

    pub fn output_labels(&self) -> &[String] {
        &self.output_labels
    }

    pub fn kernel(&self) -> &[Vec<M::Value>] {
        &self.kernel
    }

    pub fn mode(&self) -> &M {
        &self.mode
    }

    pub fn num_inputs(&self) -> usize {
        self.input_labels.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.output_labels.len()
    }

    pub fn input_index(&self, label: &str) -> Option<usize> {
        self.input_labels.iter().position(|l| l == label)
    }

    /// The output distribution of R(x_i) as a standalone distribution.
    pub fn row_distribution(&self, input: usize) -> Result<DiscreteDistribution<M>> {
        let row = self.kernel.get(input).ok_or_else(|| {
            Error::SpaceMismatch(format!(
                "input index {input} out of range for {} inputs",
                self.num_inputs()
            ))
        })?;
        DiscreteDistribution::new(self.output_labels.clone(), row.clone(), self.mode.clone())
    }

    /// Pointwise column minima over inputs: inf_x Pr[R(x) = y] per output.
    pub fn column_minima(&self) -> Vec<M::Value> {
        (0..self.num_outputs())
            .map(|j| {
                self.kernel
                    .iter()
                    .map(|row| row[j].clone())
                    .min_by(|a, b| a.partial_cmp(b).expect("probabilities are comparable"))
                    .expect("at least one row")
            })
            .collect()
    }

    /// The largest column-wise row ratio e^eps = max_y max_{x,x'} k[x][y]/k[x'][y].
    ///
    /// Infinite when some column mixes zero and positive entries; all-zero
    /// columns are ignored. A single-row mechanism has ratio 1 (eps = 0).
    pub fn dp_max_ratio(&self) -> Extended<M::Value> {
        let zero = M::Value::zero();
        let mut worst = Extended::Finite(M::Value::one());
        for j in 0..self.num_outputs() {
            let column: Vec<&M::Value> = self.kernel.iter().map(|row| &row[j]).collect();
            let max = column
                .iter()
                .max_by(|a, b| a.partial_cmp(b).expect("comparable"))
                .expect("nonempty");
            if **max == zero {
                continue;
            }
            let min = column
                .iter()
                .min_by(|a, b| a.partial_cmp(b).expect("comparable"))
                .expect("nonempty");
            if **min == zero {
                return Extended::Infinite;
            }
            worst = worst.max_with(Extended::Finite((*max).clone() / (*min).clone()));
        }
        worst
    }

    /// eps(R) = ln of the max column-wise row ratio, as a double.
    pub fn dp_epsilon(&self) -> f64 {
        self.dp_max_ratio().ln()
    }
}

/// A prior over a mechanism's input space.
#[derive(Clone, Debug, PartialEq)]
pub struct InputPrior<M: NumericMode>(DiscreteDistribution<M>);

impl<M: NumericMode> InputPrior<M> {
    /// The prior must cover exactly the mechanism's input space; no
    /// implicit embedding of smaller spaces.
    pub fn new(dist: DiscreteDistribution<M>, mechanism: &Mechanism<M>) -> Result<Self> {
        if dist.labels() != mechanism.input_labels() {
            return Err(Error::SpaceMismatch(
                "prior labels must match the mechanism input space".into(),
            ));
        }
        Ok(InputPrior(dist))
    }

    pub fn distribution(&self) -> &DiscreteDistribution<M> {
        &self.0
    }
}

/// R*(V): the output distribution of R applied to an input drawn from V,
/// i.e. the V-weighted mixture of kernel rows.
pub fn lift<M: NumericMode>(
    mechanism: &Mechanism<M>,
    prior: &InputPrior<M>,
) -> Result<DiscreteDistribution<M>> {
    let weights = prior.distribution().probs();
    let mut mixed = vec![M::Value::zero(); mechanism.num_outputs()];
    for (row, weight) in mechanism.kernel().iter().zip(weights) {
        if weight.is_zero() {
            continue;
        }
        for (j, value) in row.iter().enumerate() {
            mixed[j] = mixed[j].clone() + weight.clone() * value.clone();
        }
    }
    DiscreteDistribution::new(
        mechanism.output_labels().to_vec(),
        mixed,
        mechanism.mode().clone(),
    )
}

/// k-ary randomized response with e^eps given as a scalar (rational in
/// exact mode, which keeps the kernel exactly rational): the diagonal gets
/// e^eps / (e^eps + k - 1), everything else 1 / (e^eps + k - 1).
pub fn krr<M: NumericMode>(k_ary: usize, e_eps: M::Value, mode: M) -> Result<Mechanism<M>> {
    if k_ary < 2 {
        return Err(Error::BadArity(k_ary));
    }
    if e_eps <= M::Value::one() {
        return Err(Error::NonpositiveEpsilon);
    }
    let denom = e_eps.clone() + M::Value::from_u64(k_ary as u64 - 1);
    let diag = e_eps / denom.clone();
    let off = M::Value::one() / denom;
    let labels: Vec<String> = (1..=k_ary).map(|i| i.to_string()).collect();
    let kernel: Vec<Vec<M::Value>> = (0..k_ary)
        .map(|i| {
            (0..k_ary)
                .map(|j| if i == j { diag.clone() } else { off.clone() })
                .collect()
        })
        .collect();
    Mechanism::new(labels.clone(), labels, kernel, mode)
}

/// Laplace noise on [0, 1], discretized.
///
/// Inputs are the `bins` bin centers of [0, 1]; outputs reuse the same bin
/// width over [-B, 1 + B] with B = 10/eps, and the truncated tail mass is
/// folded into the outermost bins. Each cell mass is the exact integral of
/// the Laplace density via its CDF, not a midpoint sample.
pub fn discretized_laplace(eps: f64, bins: usize) -> Result<Mechanism<Float>> {
    if !(eps > 0.0) {
        return Err(Error::NonpositiveEpsilon);
    }
    if bins < 2 {
        return Err(Error::TooFewBins(bins));
    }
    let width = 1.0 / bins as f64;
    let tail = (10.0 / eps / width).ceil() * width; // B rounded up to the grid
    let cells = ((1.0 + 2.0 * tail) / width).round() as usize;
    let low = -tail;

    let cdf = |z: f64| -> f64 {
        if z < 0.0 {
            0.5 * (eps * z).exp()
        } else {
            1.0 - 0.5 * (-eps * z).exp()
        }
    };

    let input_labels: Vec<String> = (0..bins)
        .map(|i| format!("{:.6}", (i as f64 + 0.5) * width))
        .collect();
    let output_labels: Vec<String> = (0..cells)
        .map(|j| format!("{:.6}", low + (j as f64 + 0.5) * width))
        .collect();

    let kernel: Vec<Vec<f64>> = (0..bins)
        .map(|i| {
            let x = (i as f64 + 0.5) * width;
            let mut row: Vec<f64> = (0..cells)
                .map(|j| {
                    let a = low + j as f64 * width;
                    cdf(a + width - x) - cdf(a - x)
                })
                .collect();
            row[0] += cdf(low - x);
            row[cells - 1] += 1.0 - cdf(low + cells as f64 * width - x);
            // remove the residual rounding drift so each row validates
            let sum: f64 = crate::numeric::compensated_sum(row.iter().copied());
            for v in &mut row {
                *v /= sum;
            }
            row
        })
        .collect();

    Mechanism::new(input_labels, output_labels, kernel, Float::default())
}
