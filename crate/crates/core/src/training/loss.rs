//! Sum rate assembled on the tape from per-AP summaries.

use crate::channel::ChannelStats;
use crate::error::Result;
use crate::numerics::{Axis, Reduction, Tape, Tensor, Var};
use crate::rate::SharedInfo;

/// Sum rate of one instance. APs in `active` contribute through their power
/// columns (`N × 1` tape values); every other AP contributes the fixed
/// summaries in `fixed`.
pub fn sum_rate_tape(
    tape: &mut Tape,
    stats: &ChannelStats,
    active: &[(usize, Var)],
    fixed: &[SharedInfo],
) -> Result<Var> {
    let n_ues = stats.num_ues();
    let m = stats.antennas as f64;
    let rho = stats.downlink_snr;

    let mut ds_c = Tensor::zeros(n_ues, 1);
    let mut pc_c = Tensor::zeros(n_ues, n_ues);
    let mut ui_c = Tensor::zeros(n_ues, 1);
    for info in fixed {
        for n in 0..n_ues {
            ds_c.data_mut()[n] += info.ds[n];
            ui_c.data_mut()[n] += info.ui.row(n).iter().sum::<f64>();
        }
        pc_c.add_assign(&info.pc);
    }
    let mut ds = tape.constant(ds_c);
    let mut pc = tape.constant(pc_c);
    let mut ui = tape.constant(ui_c);

    for &(k, p) in active {
        let v = tape.constant(Tensor::column_vector(stats.v.row(k).to_vec()));
        let sigma_row = stats.sigma.row(k);
        let sigma = tape.constant(Tensor::column_vector(sigma_row.to_vec()));
        let coupling = tape.constant(Tensor::from_fn(n_ues, n_ues, |other, n| {
            (sigma_row[n] / sigma_row[other] * stats.gram.get(other, n)).abs()
        }));
        let rp = tape.scale(p, rho)?;
        let amp = tape.sqrt(rp)?;
        let ds_k = tape.mul(amp, v)?;
        let pc_k = tape.mul(ds_k, coupling)?;
        let rpv = tape.mul(rp, v)?;
        let spent = tape.sum_all(rpv)?;
        let ui_k = tape.mul(sigma, spent)?;
        ds = tape.add(ds, ds_k)?;
        pc = tape.add(pc, pc_k)?;
        ui = tape.add(ui, ui_k)?;
    }

    let off_diagonal = tape.constant(Tensor::from_fn(n_ues, n_ues, |a, b| {
        f64::from(u8::from(a != b))
    }));
    let ds2 = tape.square(ds)?;
    let numerator = tape.scale(ds2, m * m)?;
    let pc2 = tape.square(pc)?;
    let pc2 = tape.mul(pc2, off_diagonal)?;
    let contamination = tape.reduce(pc2, Reduction::Sum, Axis::Rows)?;
    let contamination = tape.transpose(contamination)?;
    let contamination = tape.scale(contamination, m * m)?;
    let interference = tape.scale(ui, m)?;
    let denominator = tape.add(contamination, interference)?;
    let denominator = tape.add_scalar(denominator, 1.0)?;
    let sinr = tape.div(numerator, denominator)?;
    let one_plus = tape.add_scalar(sinr, 1.0)?;
    let rates = tape.log2(one_plus)?;
    tape.sum_all(rates)
}
