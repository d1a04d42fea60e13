//! The dimensionless angular structure of the dipole-dipole interaction for
//! one channel `l j + l j -> l_s j_s + l_t j_t`.
//!
//! The transition operator couples the two-atom Zeeman basis of the initial
//! level pair to the Zeeman basis of the target pair; total projection
//! M = m_A + m_B is conserved, so everything is built and diagonalized in
//! M blocks. Squaring the operator gives the dimensionless interaction
//! matrix whose eigenvalues, scaled by C6/R^6, are the long-range pair
//! energies.
//!
//! Two normalizations of the squared operator appear:
//!
//! * [`AngularChannelMatrix::d_block_ordered`] keeps a fixed assignment of
//!   the two target levels to the two atoms (atom A to (l_s, j_s), atom B to
//!   (l_t, j_t));
//! * [`AngularChannelMatrix::d_block`] sums both assignments, which is the
//!   generic situation for a pair of distinct target levels and the
//!   convention used in the tabulated relative strengths.
//!
//! Basis ordering convention: within each M block, two-atom kets are sorted
//! by (m_A descending, m_B descending) so that exported tables are
//! reproducible byte for byte. Eigenvector signs are fixed by making the
//! largest-magnitude component positive.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::angular::{clebsch_gordan, wigner_6j, wigner_9j};
use crate::error::Error;
use crate::halfint::HalfInt;

/// One angular momentum channel: both atoms start in (l, j) and the pair is
/// dipole-coupled to (l_s, j_s) + (l_t, j_t).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AngularChannel {
    pub l_init: HalfInt,
    pub j_init: HalfInt,
    pub l_s: HalfInt,
    pub j_s: HalfInt,
    pub l_t: HalfInt,
    pub j_t: HalfInt,
}

impl AngularChannel {
    pub fn new(
        l_init: HalfInt,
        j_init: HalfInt,
        l_s: HalfInt,
        j_s: HalfInt,
        l_t: HalfInt,
        j_t: HalfInt,
    ) -> Result<Self, Error> {
        let ch = AngularChannel { l_init, j_init, l_s, j_s, l_t, j_t };
        ch.validate()?;
        Ok(ch)
    }

    fn validate(&self) -> Result<(), Error> {
        for (name, l) in [("l", self.l_init), ("l_s", self.l_s), ("l_t", self.l_t)] {
            if !l.is_integer() || l.is_negative() {
                return Err(Error::InvalidQuantumNumbers(format!(
                    "orbital momentum {name} = {l} must be a nonnegative integer"
                )));
            }
        }
        for (l, j, who) in [
            (self.l_init, self.j_init, "initial"),
            (self.l_s, self.j_s, "first target"),
            (self.l_t, self.j_t, "second target"),
        ] {
            if (j - l).abs() != HalfInt::HALF {
                return Err(Error::InvalidQuantumNumbers(format!(
                    "{who} state has j = {j} inconsistent with l = {l} and spin 1/2"
                )));
            }
        }
        for (l_f, who) in [(self.l_s, "first"), (self.l_t, "second")] {
            if (l_f - self.l_init).abs() != HalfInt::ONE {
                return Err(Error::SelectionRule(format!(
                    "dipole parity requires |l_{who} - l| = 1, got l = {} -> {}",
                    self.l_init, l_f
                )));
            }
        }
        for (j_f, who) in [(self.j_s, "first"), (self.j_t, "second")] {
            if (j_f - self.j_init).abs() > HalfInt::ONE {
                return Err(Error::SelectionRule(format!(
                    "dipole coupling requires |j_{who} - j| <= 1, got j = {} -> {}",
                    self.j_init, j_f
                )));
            }
        }
        Ok(())
    }

    /// The same channel with the two target levels swapped.
    pub fn reversed(&self) -> AngularChannel {
        AngularChannel {
            l_init: self.l_init,
            j_init: self.j_init,
            l_s: self.l_t,
            j_s: self.j_t,
            l_t: self.l_s,
            j_t: self.j_s,
        }
    }

    /// True when both target levels carry the same (l, j).
    pub fn symmetric_targets(&self) -> bool {
        self.l_s == self.l_t && self.j_s == self.j_t
    }
}

impl fmt::Display for AngularChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}->{}{}+{}{}",
            l_letter(self.l_init),
            self.j_init,
            l_letter(self.l_s),
            self.j_s,
            l_letter(self.l_t),
            self.j_t
        )
    }
}

pub(crate) fn l_letter(l: HalfInt) -> char {
    match l.as_int() {
        Some(0) => 's',
        Some(1) => 'p',
        Some(2) => 'd',
        Some(3) => 'f',
        Some(4) => 'g',
        _ => '?',
    }
}

pub(crate) fn letter_l(c: char) -> Option<i32> {
    match c {
        's' => Some(0),
        'p' => Some(1),
        'd' => Some(2),
        'f' => Some(3),
        'g' => Some(4),
        _ => None,
    }
}

/// Two-atom Zeeman kets (m_A, m_B) with m_A + m_B equal to the block
/// projection, ordered by m_A descending (then m_B descending).
pub fn pair_kets(j_a: HalfInt, j_b: HalfInt, twice_m: i32) -> Vec<(HalfInt, HalfInt)> {
    let mut kets = Vec::new();
    for m_a in j_a.projections().rev() {
        let m_b = HalfInt::from_twice(twice_m - m_a.twice());
        if j_b.admits_projection(m_b) {
            kets.push((m_a, m_b));
        }
    }
    kets
}

/// One M block of the channel operator.
#[derive(Clone, Debug)]
pub struct MBlock {
    pub twice_m: i32,
    /// Initial-pair kets (m_A, m_B), the column basis.
    pub initial_kets: Vec<(HalfInt, HalfInt)>,
    /// Target-pair kets (m_s, m_t) for the ordered assignment, the row basis.
    pub target_kets: Vec<(HalfInt, HalfInt)>,
    /// <m_s m_t|M|m_A m_B> for the ordered assignment.
    pub mat: DMatrix<f64>,
    /// Same for the reversed assignment (target kets of the reversed
    /// channel).
    pub mat_reversed: DMatrix<f64>,
}

/// The channel operator in M blocks together with its squared forms.
#[derive(Clone, Debug)]
pub struct AngularChannelMatrix {
    pub channel: AngularChannel,
    blocks: BTreeMap<i32, MBlock>,
}

impl AngularChannelMatrix {
    pub fn blocks(&self) -> impl Iterator<Item = &MBlock> {
        self.blocks.values()
    }

    pub fn block(&self, twice_m: i32) -> Option<&MBlock> {
        self.blocks.get(&twice_m)
    }

    /// Dimensionless squared operator on the initial Zeeman block, for the
    /// ordered target assignment only (atom A to (l_s, j_s), atom B to
    /// (l_t, j_t)).
    pub fn d_block_ordered(&self, twice_m: i32) -> Option<DMatrix<f64>> {
        self.blocks.get(&twice_m).map(|b| b.mat.transpose() * &b.mat)
    }

    /// Dimensionless squared operator summed over both assignments of the
    /// two target levels to the two atoms. This is the operator whose
    /// eigenvalues the reference strength tables list; for a pair of
    /// identical target levels it is simply twice the ordered form.
    pub fn d_block(&self, twice_m: i32) -> Option<DMatrix<f64>> {
        self.blocks.get(&twice_m).map(|b| {
            b.mat.transpose() * &b.mat + b.mat_reversed.transpose() * &b.mat_reversed
        })
    }

    /// The squared operator over all M blocks as a [`PairOperator`].
    pub fn pair_operator(&self) -> PairOperator {
        let blocks = self
            .blocks
            .iter()
            .map(|(&m, _)| (m, self.d_block(m).unwrap()))
            .collect();
        PairOperator { j: self.channel.j_init, blocks }
    }
}

/// Builds the channel transition operator in M blocks.
///
/// Every element is assembled from the same angular factors: the parity
/// coefficients C^{l_s 0}_{l 0 1 0} C^{l_t 0}_{l 0 1 0}, the factor
/// sqrt(6)(2l+1)(2j+1) with phase (-1)^{2j+1}, one 6j factor
/// {l 1/2 j; j_f 1 l_f} per target level, and the rank-2 contraction
/// sum_p C^{20}_{1p 1 -p} C^{j_s m_s}_{j m_A 1 p} C^{j_t m_t}_{j m_B 1 -p}.
pub fn build_m_operator(channel: &AngularChannel) -> Result<AngularChannelMatrix, Error> {
    channel.validate()?;
    let j = channel.j_init;
    let prefactor = m_operator_prefactor(channel)?;
    let prefactor_rev = m_operator_prefactor(&channel.reversed())?;

    let mut blocks = BTreeMap::new();
    for twice_m in (-2 * j.twice()..=2 * j.twice()).step_by(2) {
        let initial_kets = pair_kets(j, j, twice_m);
        if initial_kets.is_empty() {
            continue;
        }
        let target_kets = pair_kets(channel.j_s, channel.j_t, twice_m);
        let target_kets_rev = pair_kets(channel.j_t, channel.j_s, twice_m);
        let mat = m_block_matrix(channel, prefactor, &initial_kets, &target_kets)?;
        let mat_reversed =
            m_block_matrix(&channel.reversed(), prefactor_rev, &initial_kets, &target_kets_rev)?;
        blocks.insert(
            twice_m,
            MBlock { twice_m, initial_kets, target_kets, mat, mat_reversed },
        );
    }
    Ok(AngularChannelMatrix { channel: *channel, blocks })
}

fn m_operator_prefactor(channel: &AngularChannel) -> Result<f64, Error> {
    let l = channel.l_init;
    let j = channel.j_init;
    let zero = HalfInt::ZERO;
    let one = HalfInt::ONE;
    let half = HalfInt::HALF;
    let c_par_s = clebsch_gordan(l, zero, one, zero, channel.l_s, zero)?;
    let c_par_t = clebsch_gordan(l, zero, one, zero, channel.l_t, zero)?;
    let six_s = wigner_6j(l, half, j, channel.j_s, one, channel.l_s)?;
    let six_t = wigner_6j(l, half, j, channel.j_t, one, channel.l_t)?;
    let sign = if (j.twice() + 1) % 2 == 0 { 1.0 } else { -1.0 }; // (-1)^(2j+1)
    Ok(sign
        * c_par_s
        * c_par_t
        * 6.0_f64.sqrt()
        * f64::from(l.twice() + 1)
        * f64::from(j.twice() + 1)
        * six_s
        * six_t)
}

fn m_block_matrix(
    channel: &AngularChannel,
    prefactor: f64,
    initial_kets: &[(HalfInt, HalfInt)],
    target_kets: &[(HalfInt, HalfInt)],
) -> Result<DMatrix<f64>, Error> {
    let j = channel.j_init;
    let one = HalfInt::ONE;
    let two = HalfInt::from_int(2);
    let mut mat = DMatrix::zeros(target_kets.len(), initial_kets.len());
    for (col, &(m_a, m_b)) in initial_kets.iter().enumerate() {
        for (row, &(m_s, m_t)) in target_kets.iter().enumerate() {
            let mut sum = 0.0;
            for tp in [-2i32, 0, 2] {
                let p = HalfInt::from_twice(tp);
                if m_s - m_a != p || m_t - m_b != -p {
                    continue;
                }
                let c20 = clebsch_gordan(one, p, one, -p, two, HalfInt::ZERO)?;
                let cs = clebsch_gordan(j, m_a, one, p, channel.j_s, m_s)?;
                let ct = clebsch_gordan(j, m_b, one, -p, channel.j_t, m_t)?;
                sum += c20 * cs * ct;
            }
            mat[(row, col)] = prefactor * sum;
        }
    }
    Ok(mat)
}

/// A block-diagonal real symmetric operator on the two-atom Zeeman basis of
/// an initial level, e.g. the squared channel operator or a C6-weighted sum
/// of several channels.
#[derive(Clone, Debug)]
pub struct PairOperator {
    pub j: HalfInt,
    blocks: BTreeMap<i32, DMatrix<f64>>,
}

impl PairOperator {
    pub fn from_blocks(j: HalfInt, blocks: BTreeMap<i32, DMatrix<f64>>) -> Self {
        PairOperator { j, blocks }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (i32, &DMatrix<f64>)> {
        self.blocks.iter().map(|(&m, b)| (m, b))
    }

    pub fn block(&self, twice_m: i32) -> Option<&DMatrix<f64>> {
        self.blocks.get(&twice_m)
    }

    pub fn kets(&self, twice_m: i32) -> Vec<(HalfInt, HalfInt)> {
        pair_kets(self.j, self.j, twice_m)
    }

    /// Scales every block.
    pub fn scaled(&self, factor: f64) -> PairOperator {
        let blocks = self.blocks.iter().map(|(&m, b)| (m, b * factor)).collect();
        PairOperator { j: self.j, blocks }
    }

    /// Diagonalizes every M >= 0 block; spectra of -M blocks are identical
    /// by time-reversal symmetry.
    pub fn eigensystem(&self) -> ChannelEigensystem {
        let mut blocks = Vec::new();
        for (&twice_m, mat) in self.blocks.range(0..) {
            let dim = mat.nrows();
            if dim == 0 {
                continue;
            }
            let eig = nalgebra::SymmetricEigen::new(mat.clone());
            // Sort descending, fix the sign of each vector.
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
            let mut eigenvalues = Vec::with_capacity(dim);
            let mut eigenvectors = Vec::with_capacity(dim);
            for &i in &order {
                eigenvalues.push(eig.eigenvalues[i]);
                let mut v: DVector<f64> = eig.eigenvectors.column(i).into_owned();
                let lead = v.iter().enumerate().fold((0usize, 0.0f64), |acc, (k, &x)| {
                    if x.abs() > acc.1 { (k, x.abs()) } else { acc }
                });
                if v[lead.0] < 0.0 {
                    v.neg_mut();
                }
                eigenvectors.push(v);
            }
            blocks.push(MBlockEigen {
                twice_m_abs: twice_m,
                kets: self.kets(twice_m),
                eigenvalues,
                eigenvectors,
            });
        }
        ChannelEigensystem { j: self.j, blocks }
    }

    /// The same operator in the coupled |j j J M> basis (J-labeled rows,
    /// descending J within each block).
    pub fn to_coupled_basis(&self) -> BTreeMap<i32, DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|(&m, b)| {
                let u = coupling_matrix(self.j, self.j, m);
                (m, &u * b * u.transpose())
            })
            .collect()
    }
}

/// Sums channel operators with scalar weights; all channels must share the
/// initial (l, j). Blocks missing from one channel count as zero.
pub fn sum_channels(terms: &[(&AngularChannelMatrix, f64)]) -> Result<PairOperator, Error> {
    let Some(first) = terms.first() else {
        return Err(Error::InvalidInput("no channels to sum".into()));
    };
    let (l0, j0) = (first.0.channel.l_init, first.0.channel.j_init);
    for (m, _) in terms {
        if m.channel.l_init != l0 || m.channel.j_init != j0 {
            return Err(Error::InvalidInput(format!(
                "cannot sum channels with different initial states: {} vs {}",
                first.0.channel, m.channel
            )));
        }
    }
    let mut blocks: BTreeMap<i32, DMatrix<f64>> = BTreeMap::new();
    for (mat, weight) in terms {
        for block in mat.blocks() {
            let d = mat.d_block(block.twice_m).unwrap() * *weight;
            blocks
                .entry(block.twice_m)
                .and_modify(|acc| *acc += &d)
                .or_insert(d);
        }
    }
    Ok(PairOperator { j: j0, blocks })
}

/// Eigenvalues and eigenvectors of the squared channel operator, one entry
/// per |M| block, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct ChannelEigensystem {
    pub j: HalfInt,
    pub blocks: Vec<MBlockEigen>,
}

#[derive(Clone, Debug)]
pub struct MBlockEigen {
    pub twice_m_abs: i32,
    pub kets: Vec<(HalfInt, HalfInt)>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<DVector<f64>>,
}

impl ChannelEigensystem {
    pub fn block(&self, twice_m_abs: i32) -> Option<&MBlockEigen> {
        self.blocks.iter().find(|b| b.twice_m_abs == twice_m_abs)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.eigenvalues.iter().copied())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// States with eigenvalue below a threshold: candidates for vanishing
/// dipole-dipole coupling.
#[derive(Clone, Debug)]
pub struct ForsterZeroReport {
    pub threshold: f64,
    /// (|M| twice-value, index within block, eigenvalue, eigenvector).
    pub zero_states: Vec<(i32, usize, f64, DVector<f64>)>,
}

/// Exact-zero threshold: numerically zero eigenvalues of the squared
/// operator.
pub const EXACT_ZERO_THRESHOLD: f64 = 1e-10;
/// Threshold below which a state is too weakly coupled to be useful.
pub const WEAK_THRESHOLD: f64 = 0.05;

pub fn find_forster_zeros(eigensystem: &ChannelEigensystem, threshold: f64) -> ForsterZeroReport {
    let mut zero_states = Vec::new();
    for block in &eigensystem.blocks {
        for (i, (&val, vec)) in block.eigenvalues.iter().zip(&block.eigenvectors).enumerate() {
            if val < threshold {
                zero_states.push((block.twice_m_abs, i, val, vec.clone()));
            }
        }
    }
    ForsterZeroReport { threshold, zero_states }
}

/// Unitary change of basis from the product basis (ordered per
/// [`pair_kets`]) to the coupled |j_a j_b J M> basis; rows are J descending.
/// Rows: J = j_a + j_b, j_a + j_b - 1, ..., down to max(|j_a - j_b|, |M|).
pub fn coupling_matrix(j_a: HalfInt, j_b: HalfInt, twice_m: i32) -> DMatrix<f64> {
    let kets = pair_kets(j_a, j_b, twice_m);
    let j_max = (j_a + j_b).twice();
    let j_min = (j_a - j_b).abs().twice().max(twice_m.abs());
    let js: Vec<i32> = (j_min..=j_max).rev().step_by(2).collect();
    let m = HalfInt::from_twice(twice_m);
    DMatrix::from_fn(js.len(), kets.len(), |r, c| {
        let jj = HalfInt::from_twice(js[r]);
        let (m_a, m_b) = kets[c];
        clebsch_gordan(j_a, m_a, j_b, m_b, jj, m).expect("valid coupling")
    })
}

/// Total-J labels matching the rows of [`coupling_matrix`].
pub fn coupled_j_labels(j_a: HalfInt, j_b: HalfInt, twice_m: i32) -> Vec<HalfInt> {
    let j_max = (j_a + j_b).twice();
    let j_min = (j_a - j_b).abs().twice().max(twice_m.abs());
    (j_min..=j_max).rev().step_by(2).map(HalfInt::from_twice).collect()
}

/// The channel operator expressed directly in coupled two-atom bases via
/// recoupling: <(j_s j_t) K M | M | (j j) J M> is proportional to a single
/// 9j symbol,
///
/// C^{KM}_{JM 20} sqrt(5 (2J+1)(2j_s+1)(2j_t+1)) {j_s j 1; j_t j 1; K J 2}
///
/// times the scalar channel prefactor. Serves as an independent route to the
/// matrix built in the product basis and transformed with
/// [`coupling_matrix`].
pub fn coupled_m_via_recoupling(
    channel: &AngularChannel,
    twice_m: i32,
) -> Result<DMatrix<f64>, Error> {
    channel.validate()?;
    let j = channel.j_init;
    let pref = m_operator_prefactor(channel)?;
    let ks = coupled_j_labels(channel.j_s, channel.j_t, twice_m);
    let js = coupled_j_labels(j, j, twice_m);
    let m = HalfInt::from_twice(twice_m);
    let one = HalfInt::ONE;
    let two = HalfInt::from_int(2);
    let mut out = DMatrix::zeros(ks.len(), js.len());
    for (r, &k) in ks.iter().enumerate() {
        for (c, &jj) in js.iter().enumerate() {
            let cg = clebsch_gordan(jj, m, two, HalfInt::ZERO, k, m)?;
            if cg == 0.0 {
                continue;
            }
            let nine = wigner_9j(channel.j_s, j, one, channel.j_t, j, one, k, jj, two)?;
            let scale = (5.0
                * f64::from(jj.twice() + 1)
                * f64::from(channel.j_s.twice() + 1)
                * f64::from(channel.j_t.twice() + 1))
            .sqrt();
            out[(r, c)] = pref * cg * scale * nine;
        }
    }
    Ok(out)
}

/// The normalized target-pair state reached from an eigenstate of the
/// squared operator, together with sqrt of its eigenvalue.
///
/// Acting with the channel operator on an eigenstate phi of the squared
/// operator produces a unique target superposition chi with
/// M phi = sqrt(D) chi and M^T chi = sqrt(D) phi; the two states close on
/// themselves under the dipole-dipole coupling.
pub struct ForsterPairState {
    /// Components over the ordered-assignment kets, then the
    /// reversed-assignment kets of the block.
    pub chi: DVector<f64>,
    pub sqrt_d: f64,
}

pub fn forster_pair_state(
    matrix: &AngularChannelMatrix,
    twice_m: i32,
    phi: &DVector<f64>,
) -> Result<ForsterPairState, Error> {
    let block = matrix
        .block(twice_m)
        .ok_or_else(|| Error::InvalidInput(format!("no block with 2M = {twice_m}")))?;
    let top = &block.mat * phi;
    let bottom = &block.mat_reversed * phi;
    let mut chi = DVector::zeros(top.len() + bottom.len());
    chi.rows_mut(0, top.len()).copy_from(&top);
    chi.rows_mut(top.len(), bottom.len()).copy_from(&bottom);
    let d = chi.norm_squared();
    if d < 1e-12 {
        return Err(Error::InvalidInput(
            "state with zero dipole-dipole coupling has no partner state".into(),
        ));
    }
    let sqrt_d = d.sqrt();
    Ok(ForsterPairState { chi: chi / sqrt_d, sqrt_d })
}

/// A channel specification where the target fine structure may be left
/// open, standing for the sum over fine-structure components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelSpec {
    pub l_init: HalfInt,
    pub j_init: HalfInt,
    pub target1: (HalfInt, Option<HalfInt>),
    pub target2: (HalfInt, Option<HalfInt>),
}

impl ChannelSpec {
    /// Parses "p1/2->s1/2+s1/2", "d5/2->p3/2+f", "s1/2->p+p".
    pub fn parse(s: &str) -> Result<Self, Error> {
        let (init, rest) = s
            .split_once("->")
            .ok_or_else(|| Error::Parse(format!("channel must look like a->b+c: {s}")))?;
        let (t1, t2) = rest
            .split_once('+')
            .ok_or_else(|| Error::Parse(format!("channel target must look like b+c: {s}")))?;
        let (l_init, j_init) = parse_lj(init.trim())?;
        let j_init = j_init
            .ok_or_else(|| Error::Parse(format!("initial state needs explicit j: {init}")))?;
        Ok(ChannelSpec {
            l_init,
            j_init,
            target1: parse_lj(t1.trim())?,
            target2: parse_lj(t2.trim())?,
        })
    }

    /// Every fine-structure channel covered by the spec, with its weight in
    /// the summed operator. A mixed pair of distinct target terms counts
    /// twice: both orderings of the two levels occur as distinct pairs.
    pub fn expand(&self) -> Result<Vec<(AngularChannel, f64)>, Error> {
        let set1 = js_for(self.target1, self.j_init)?;
        let set2 = js_for(self.target2, self.j_init)?;
        let mut combos: Vec<(AngularChannel, f64)> = Vec::new();
        for &(l1, j1) in &set1 {
            for &(l2, j2) in &set2 {
                let ch = AngularChannel::new(self.l_init, self.j_init, l1, j1, l2, j2)?;
                if let Some(entry) = combos
                    .iter_mut()
                    .find(|(c, _)| *c == ch || *c == ch.reversed())
                {
                    entry.1 += 1.0;
                } else {
                    combos.push((ch, 1.0));
                }
            }
        }
        Ok(combos)
    }

    /// The summed (unit-weight) operator of the spec.
    pub fn pair_operator(&self) -> Result<PairOperator, Error> {
        let combos = self.expand()?;
        let mats: Vec<(AngularChannelMatrix, f64)> = combos
            .iter()
            .map(|(ch, w)| Ok((build_m_operator(ch)?, *w)))
            .collect::<Result<_, Error>>()?;
        let refs: Vec<(&AngularChannelMatrix, f64)> = mats.iter().map(|(m, w)| (m, *w)).collect();
        sum_channels(&refs)
    }

    pub fn id(&self) -> String {
        format!("{self}")
    }
}

impl fmt::Display for ChannelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = |t: (HalfInt, Option<HalfInt>)| match t.1 {
            Some(j) => format!("{}{}", l_letter(t.0), j),
            None => format!("{}", l_letter(t.0)),
        };
        write!(
            f,
            "{}{}->{}+{}",
            l_letter(self.l_init),
            self.j_init,
            t(self.target1),
            t(self.target2)
        )
    }
}

fn parse_lj(s: &str) -> Result<(HalfInt, Option<HalfInt>), Error> {
    let mut chars = s.chars();
    let lc = chars
        .next()
        .ok_or_else(|| Error::Parse("empty state term".into()))?;
    let l = letter_l(lc).ok_or_else(|| Error::Parse(format!("unknown orbital letter: {lc}")))?;
    let rest: String = chars.collect();
    let j = if rest.is_empty() {
        None
    } else {
        Some(HalfInt::parse(&rest)?)
    };
    Ok((HalfInt::from_int(l), j))
}

fn js_for(
    target: (HalfInt, Option<HalfInt>),
    _j_init: HalfInt,
) -> Result<Vec<(HalfInt, HalfInt)>, Error> {
    let (l, j) = target;
    match j {
        Some(j) => Ok(vec![(l, j)]),
        None => {
            // Fine structure left open: both j = l +- 1/2, deduplicated for
            // l = 0.
            let mut out = vec![(l, l + HalfInt::HALF)];
            if l > HalfInt::ZERO {
                out.push((l, l - HalfInt::HALF));
            }
            out.reverse(); // ascending j
            Ok(out)
        }
    }
}

/// The 23 angular momentum channels of the reference strength table:
/// initial s, p and d states with every dipole-allowed target pair built
/// from s, p, d, f, plus the three fine-structure-summed combinations.
pub fn reference_channels() -> Vec<ChannelSpec> {
    [
        "s1/2->p+p",
        "s1/2->p1/2+p1/2",
        "s1/2->p1/2+p3/2",
        "s1/2->p3/2+p3/2",
        "p1/2->s1/2+s1/2",
        "p1/2->s1/2+d3/2",
        "p1/2->d3/2+d3/2",
        "p3/2->s1/2+s1/2",
        "p3/2->s1/2+d3/2",
        "p3/2->s1/2+d5/2",
        "p3/2->d3/2+d3/2",
        "p3/2->d3/2+d5/2",
        "p3/2->d5/2+d5/2",
        "p3/2->d+d",
        "d3/2->p1/2+p1/2",
        "d3/2->p1/2+p3/2",
        "d3/2->p3/2+p3/2",
        "d3/2->p1/2+f5/2",
        "d3/2->p3/2+f5/2",
        "d3/2->f5/2+f5/2",
        "d5/2->p3/2+p3/2",
        "d5/2->p3/2+f",
        "d5/2->f+f",
    ]
    .iter()
    .map(|s| ChannelSpec::parse(s).expect("static channel list parses"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn channel(s: &str) -> AngularChannel {
        let spec = ChannelSpec::parse(s).unwrap();
        let combos = spec.expand().unwrap();
        assert_eq!(combos.len(), 1);
        combos[0].0
    }

    #[test]
    fn p_half_to_ss_m0_block() {
        // Ordered-assignment squared operator: (8/81) * ones(2, 2) with
        // eigenvalues 0 and 16/81.
        let m = build_m_operator(&channel("p1/2->s1/2+s1/2")).unwrap();
        let d = m.d_block_ordered(0).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(d[(r, c)], 8.0 / 81.0, epsilon = 1e-14);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(d);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(vals[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(vals[1], 16.0 / 81.0, epsilon = 1e-14);

        // Both-assignments convention doubles the identical-target channel.
        let eig = m.pair_operator().eigensystem();
        let block0 = eig.block(0).unwrap();
        assert_abs_diff_eq!(block0.eigenvalues[0], 32.0 / 81.0, epsilon = 1e-13);
        assert_abs_diff_eq!(block0.eigenvalues[1], 0.0, epsilon = 1e-13);
        let block1 = eig.block(2).unwrap();
        assert_abs_diff_eq!(block1.eigenvalues[0], 8.0 / 81.0, epsilon = 1e-13);
        // Zero eigenvector is the antisymmetric combination.
        let v = &block0.eigenvectors[1];
        assert_abs_diff_eq!((v[0] + v[1]).abs(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v[0].abs(), 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn p32_to_ss_high_m_blocks_vanish() {
        let m = build_m_operator(&channel("p3/2->s1/2+s1/2")).unwrap();
        for tm in [4, 6] {
            let block = m.block(tm).unwrap();
            assert_eq!(block.target_kets.len(), 0);
            let d = m.d_block(tm).unwrap();
            assert!(d.amax() == 0.0);
        }
    }

    #[test]
    fn selection_rule_error() {
        let bad = AngularChannel::new(h(2), h(1), h(2), h(3), h(0), h(1));
        match bad {
            Err(Error::SelectionRule(msg)) => assert!(msg.contains("l")),
            other => panic!("expected selection-rule error, got {other:?}"),
        }
    }

    #[test]
    fn pair_spectra_symmetric_in_m() {
        let spec = ChannelSpec::parse("d5/2->p3/2+f").unwrap();
        let op = spec.pair_operator().unwrap();
        for (m, block) in op.blocks() {
            if m <= 0 {
                continue;
            }
            let minus = op.block(-m).unwrap();
            let e_plus = nalgebra::SymmetricEigen::new(block.clone()).eigenvalues;
            let e_minus = nalgebra::SymmetricEigen::new(minus.clone()).eigenvalues;
            let mut p: Vec<f64> = e_plus.iter().copied().collect();
            let mut q: Vec<f64> = e_minus.iter().copied().collect();
            p.sort_by(|a, b| a.partial_cmp(b).unwrap());
            q.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in p.iter().zip(&q) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sum_channels_identity_and_zero_padding() {
        let m1 = build_m_operator(&channel("s1/2->p1/2+p1/2")).unwrap();
        let single = sum_channels(&[(&m1, 1.0)]).unwrap();
        let direct = m1.pair_operator();
        for (m, b) in single.blocks() {
            assert!((b - direct.block(m).unwrap()).amax() < 1e-14);
        }
        // Mismatched initial states refuse to sum.
        let m2 = build_m_operator(&channel("p1/2->s1/2+s1/2")).unwrap();
        assert!(sum_channels(&[(&m1, 1.0), (&m2, 1.0)]).is_err());
    }

    #[test]
    fn coupling_matrix_unitary() {
        for (ja, jb, tm) in [(h(5), h(5), 0), (h(5), h(5), 2), (h(3), h(7), -2), (h(1), h(1), 0)] {
            let u = coupling_matrix(ja, jb, tm);
            let prod = &u * u.transpose();
            assert!(prod.is_identity(1e-12), "U U^T != 1 for ja={ja} jb={jb} 2M={tm}");
        }
    }

    #[test]
    fn coupled_basis_spectrum_and_j_content() {
        // The nonzero eigenvalue of the p1/2 -> s1/2+s1/2 block sits in the
        // symmetric J = 1 state; J = 0 is the zero mode.
        let m = build_m_operator(&channel("p1/2->s1/2+s1/2")).unwrap();
        let op = m.pair_operator();
        let coupled = op.to_coupled_basis();
        let b = &coupled[&0];
        let labels = coupled_j_labels(h(1), h(1), 0);
        assert_eq!(labels, vec![h(2), h(0)]);
        assert_abs_diff_eq!(b[(0, 0)], 32.0 / 81.0, epsilon = 1e-13); // J = 1
        assert_abs_diff_eq!(b[(1, 1)], 0.0, epsilon = 1e-13); // J = 0
        assert_abs_diff_eq!(b[(0, 1)], 0.0, epsilon = 1e-13);
    }

    #[test]
    fn recoupled_matrix_matches_transformed() {
        for s in ["p1/2->s1/2+s1/2", "d5/2->p3/2+f5/2", "p3/2->s1/2+d5/2"] {
            let ch = channel(s);
            let m = build_m_operator(&ch).unwrap();
            for block in m.blocks() {
                if block.target_kets.is_empty() {
                    continue;
                }
                let tm = block.twice_m;
                let u_t = coupling_matrix(ch.j_s, ch.j_t, tm);
                let u_i = coupling_matrix(ch.j_init, ch.j_init, tm);
                let transformed = &u_t * &block.mat * u_i.transpose();
                let direct = coupled_m_via_recoupling(&ch, tm).unwrap();
                assert!(
                    (transformed - direct).amax() < 1e-12,
                    "recoupling mismatch for {s} at 2M = {tm}"
                );
            }
        }
    }

    #[test]
    fn forster_pair_state_round_trip() {
        let ch = channel("p1/2->s1/2+s1/2");
        let m = build_m_operator(&ch).unwrap();
        let eig = m.pair_operator().eigensystem();
        let block = eig.block(0).unwrap();
        let phi = &block.eigenvectors[0];
        let pair = forster_pair_state(&m, 0, phi).unwrap();
        assert_abs_diff_eq!(pair.chi.norm(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pair.sqrt_d * pair.sqrt_d, 32.0 / 81.0, epsilon = 1e-12);
        // M^T chi reproduces sqrt(D) phi.
        let mb = m.block(0).unwrap();
        let back = mb.mat.transpose() * pair.chi.rows(0, mb.target_kets.len())
            + mb.mat_reversed.transpose()
                * pair.chi.rows(mb.target_kets.len(), mb.mat_reversed.nrows());
        for i in 0..phi.len() {
            assert_abs_diff_eq!(back[i], pair.sqrt_d * phi[i], epsilon = 1e-12);
        }
        // The zero mode has no partner.
        let zero = &block.eigenvectors[1];
        assert!(forster_pair_state(&m, 0, zero).is_err());
    }

    #[test]
    fn channel_spec_expansion_weights() {
        let spec = ChannelSpec::parse("s1/2->p+p").unwrap();
        let combos = spec.expand().unwrap();
        assert_eq!(combos.len(), 3);
        let w: f64 = combos.iter().map(|(_, w)| w).sum();
        assert_eq!(w, 4.0); // 2x2 ordered fine-structure assignments
        let mixed = combos
            .iter()
            .find(|(c, _)| c.j_s != c.j_t)
            .expect("mixed combo present");
        assert_eq!(mixed.1, 2.0);
    }

    #[test]
    fn channel_spec_parse_errors() {
        assert!(ChannelSpec::parse("junk").is_err());
        assert!(ChannelSpec::parse("p->s1/2+s1/2").is_err());
        assert!(ChannelSpec::parse("p1/2->x+s1/2").is_err());
    }
}
