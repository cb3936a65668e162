use std::path::Path;

use ddmd::io::{load_matrix, store_matrix, weights_from_matrix, MatrixFormat};
use ddmd::report::SpectrumReport;
use ddmd::snapshots::from_sequential;
use ddmd::variants::{self, CompressedInput, Selection};
use ddmd::weighted::{self, Orientation};
use ddmd::{DmdError, InnerProduct, RankPolicy, Refine, Result, SequentialTrajectory, SnapshotPair, VariantConfig};

use crate::{DecomposeArgs, RefineArg, VariantArg};

fn load(path: &Path) -> Result<ddmd::linalg::CMat> {
    load_matrix(path, MatrixFormat::from_path(path))
}

/// A vector file is a diagonal weight, a square one a Gram matrix.
fn load_weight(path: &Path, inverse: bool) -> Result<InnerProduct> {
    let a = load(path)?;
    let orient = if inverse { Orientation::MInverse } else { Orientation::M };
    if a.nrows() == 1 || a.ncols() == 1 {
        InnerProduct::diagonal(&weights_from_matrix(a.as_ref())?, orient)
    } else {
        InnerProduct::from_gram(a.as_ref(), orient)
    }
}

fn config(args: &DecomposeArgs) -> Result<VariantConfig> {
    let policy = match (args.eps, args.rank) {
        (Some(e), _) => Some(RankPolicy::spectral(e)?),
        (None, Some(k)) => Some(RankPolicy::fixed(k)?),
        (None, None) => None,
    };
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(DmdError::Domain(format!("--dt must be positive, got {dt}")));
        }
    }
    Ok(VariantConfig {
        policy,
        scale: !args.no_scale,
        refine: match args.refine {
            RefineArg::None => Refine::None,
            RefineArg::All => Refine::All,
            RefineArg::Cap(c) => Refine::Selected(Selection::ResidualCap(c)),
        },
        dt: args.dt,
        ..VariantConfig::default()
    })
}

pub fn run(args: &DecomposeArgs) -> Result<()> {
    let weighted = matches!(args.variant, VariantArg::Weighted | VariantArg::Weighted2);
    if !weighted && (args.weight.is_some() || args.weight_n.is_some()) {
        return Err(DmdError::Data("--weight and --weight-n apply only to weighted variants".into()));
    }
    if args.variant == VariantArg::Weighted && args.weight.is_none() {
        return Err(DmdError::Data("--variant weighted needs --weight".into()));
    }
    if args.variant == VariantArg::Weighted2 && args.weight_n.is_none() {
        return Err(DmdError::Data("--variant weighted2 needs --weight-n".into()));
    }

    let traj = match &args.seq {
        Some(p) => Some(SequentialTrajectory::new(load(p)?)?),
        None => None,
    };
    let pair = match (&traj, &args.x, &args.y) {
        (Some(f), _, _) => from_sequential(f),
        (None, Some(x), Some(y)) => SnapshotPair::new(load(x)?, load(y)?)?,
        _ => return Err(DmdError::Data("give --seq or both --x and --y".into())),
    };
    let cfg = config(args)?;

    let dec = match args.variant {
        VariantArg::Dmd => variants::dmd(&pair, &cfg)?,
        VariantArg::Rrr => variants::ddmd_rrr(&pair, &cfg)?,
        VariantArg::RrrCompressed => {
            let input = match &traj {
                Some(f) => CompressedInput::Trajectory(f),
                None => CompressedInput::Pair(&pair),
            };
            variants::ddmd_rrr_compressed(&input, &cfg)?
        }
        VariantArg::Exact => variants::exact_dmd(&pair, &cfg)?,
        VariantArg::Fb => variants::fb_dmd_mrf(&pair, &cfg)?.0,
        VariantArg::Weighted => {
            let m = load_weight(args.weight.as_deref().unwrap(), args.weight_inverse)?;
            weighted::weighted_dmd(&pair, &m, &cfg)?
        }
        VariantArg::Weighted2 => {
            let m = match &args.weight {
                Some(p) => load_weight(p, args.weight_inverse)?,
                None => InnerProduct::identity(pair.n()),
            };
            let n_ip = load_weight(args.weight_n.as_deref().unwrap(), args.weight_inverse)?;
            weighted::two_sided_weighted_dmd(&pair, &m, &n_ip, &cfg)?
        }
    };

    let weight_label = args.weight.as_ref().map(|p| p.display().to_string());
    let report = SpectrumReport::from_decomposition(&dec, weight_label.as_deref(), args.select_cap).with_dt(args.dt);
    let json = report.to_json()?;
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| DmdError::Io { path, source }
    };
    match &args.out {
        Some(p) => std::fs::write(p, &json).map_err(io(p))?,
        None => print!("{json}"),
    }
    if let Some(p) = &args.plot_csv {
        std::fs::write(p, report.plot_csv()).map_err(io(p))?;
    }
    if let Some(p) = &args.modes_out {
        store_matrix(dec.modes()?.as_ref(), p, MatrixFormat::from_path(p))?;
    }
    Ok(())
}
