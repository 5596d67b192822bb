//! `sweep`: one row per value of a single parameter, everything else held at
//! the configuration.

use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Format};
use super::run::{closed_form, simulate_scheme};
use super::table::{estimate_cells, write_file, write_json, Cell, Table};
use super::Failure;
use crate::channel::{added_noise_uncorrected, excess_noise, ChannelParams, TapConfig};
use crate::correction::{
    added_noise_het_state, added_noise_hom_ff, improvement_conditions, optimal_added_noise,
    optimal_gain, receiver_added_noise,
};
use crate::herald::{zero_window_added_noise, zero_window_gain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    #[value(name = "eta")]
    Eta,
    #[value(name = "v_env")]
    VEnv,
    #[value(name = "gamma")]
    Gamma,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Eta => "eta",
            Axis::VEnv => "v_env",
            Axis::Gamma => "gamma",
        }
    }
}

pub const COLUMNS: [&str; 25] = [
    "eta",
    "v_env",
    "gamma",
    "state_noise_uncorrected",
    "excess_noise",
    "state_noise_erasing_hom",
    "state_noise_erasing_het",
    "receiver_noise_uncorrected",
    "receiver_noise_erasing_het",
    "state_noise_optimal",
    "optical_gain_optimal",
    "state_noise_zero_window_x",
    "gain_zero_window_x",
    "improves_hom",
    "improves_het_state",
    "improves_het_receiver",
    "strategy_gain_x",
    "strategy_state_noise_x",
    "strategy_receiver_noise_x",
    "mc_gain_x",
    "mc_gain_x_stderr",
    "mc_state_noise_x",
    "mc_state_noise_x_stderr",
    "mc_receiver_noise_x",
    "mc_receiver_noise_x_stderr",
];

fn point(
    cfg: &ExperimentConfig,
    axis: Axis,
    value: f64,
) -> Result<(ChannelParams, TapConfig), Failure> {
    let (ch, tap) = (cfg.channel, cfg.tap);
    let bad =
        |e: crate::Error| Failure::Config(format!("`values`: {} = {value}: {e}", axis.name()));
    Ok(match axis {
        Axis::Eta => (ChannelParams::new(value, ch.v_env()).map_err(bad)?, tap),
        Axis::VEnv => (ChannelParams::new(ch.eta(), value).map_err(bad)?, tap),
        Axis::Gamma => (ch, TapConfig::new(value, tap.detector()).map_err(bad)?),
    })
}

pub fn sweep_table(cfg: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<Table, Failure> {
    if values.is_empty() {
        return Err(Failure::Config(
            "`values`: at least one value is required".into(),
        ));
    }
    let mut t = Table::new("envcorr-sweep v1", &COLUMNS);
    t.note(format!(
        "axis={} detector={} strategy={} n={} seed={}",
        axis.name(),
        cfg.tap.detector().name(),
        cfg.strategy.name(),
        cfg.mc.n,
        cfg.mc.seed
    ));
    let window = cfg.window();
    for (k, &value) in values.iter().enumerate() {
        let (ch, tap) = point(cfg, axis, value)?;
        let cond = improvement_conditions(ch, tap);
        let (zn, _) = zero_window_added_noise(ch, tap);
        let (zg, _) = zero_window_gain(ch, tap);
        let mut row: Vec<Cell> = vec![
            ch.eta().into(),
            ch.v_env().into(),
            tap.gamma().into(),
            added_noise_uncorrected(ch).into(),
            excess_noise(ch).into(),
            added_noise_hom_ff(ch, tap).into(),
            added_noise_het_state(ch, tap).into(),
            receiver_added_noise(ch, tap, false).into(),
            receiver_added_noise(ch, tap, true).into(),
            optimal_added_noise(ch, tap).into(),
            optimal_gain(ch, tap).1.into(),
            zn.into(),
            zg.into(),
            cond.hom.into(),
            cond.het_state.into(),
            cond.het_receiver.into(),
        ];
        // strategies that cannot run at this point leave their cells empty
        let closed = closed_form(ch, tap, cfg.strategy, window).ok().flatten();
        let [(g, v), _] = closed.unwrap_or([(f64::NAN, f64::NAN); 2]);
        if closed.is_some() {
            row.extend([g.into(), v.into(), (v + 1.0 / g).into()]);
        } else {
            row.extend([Cell::Empty, Cell::Empty, Cell::Empty]);
        }
        let runnable = closed.is_some() || window.is_some();
        if cfg.mc.n > 0 && runnable {
            let seed = cfg.mc.seed.wrapping_add(k as u64);
            let s = simulate_scheme(ch, tap, cfg.strategy, window, cfg.mc.n, seed)?;
            row.extend(estimate_cells(Some(s.x.gain)));
            row.extend(estimate_cells(Some(s.x.state_noise)));
            row.extend(estimate_cells(Some(s.x.receiver_noise)));
        } else {
            row.extend(std::iter::repeat_n(Cell::Empty, 6));
        }
        t.push(row);
    }
    Ok(t)
}

/// Writes the sweep to `output.path` or `<out_dir>/sweep_<axis>.<ext>`.
pub fn sweep(
    cfg: &ExperimentConfig,
    axis: Axis,
    values: &[f64],
    out_dir: &Path,
) -> Result<PathBuf, Failure> {
    let t = sweep_table(cfg, axis, values)?;
    let ext = match cfg.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let path = cfg
        .output
        .path
        .clone()
        .unwrap_or_else(|| out_dir.join(format!("sweep_{}.{ext}", axis.name())));
    match cfg.output.format {
        Format::Csv => write_file(&path, &t.to_csv()?)?,
        Format::Json => write_json(&path, &t.to_json())?,
    }
    Ok(path)
}
