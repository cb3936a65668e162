use std::path::Path;

use ddmd::io::encode_dmm1;
use ddmd::linalg::{creal, CMat};
use ddmd::rng::Stream;
use ddmd::verify::{make_oracle, random_start, suite, trajectory, FixtureEntry, FixtureManifest, SpectrumSpec};
use ddmd::{DmdError, Result};
use faer::Mat;

/// Writes every fixture plus `manifest.json` into `dir`.
pub fn write(dir: &Path, seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let root = Stream::new(seed);
    let mut entries = Vec::new();
    let put = |name: &str, a: &CMat| -> Result<String> {
        let file = format!("{name}.dmm1");
        let path = dir.join(&file);
        std::fs::write(&path, encode_dmm1(a.as_ref())).map_err(io(&path))?;
        Ok(file)
    };

    for (tag, name, n, m, spec, cond) in [
        (1u64, "seq_disc_200x40", 200usize, 40usize, SpectrumSpec::Disc { r_min: 0.5, r_max: 1.0 }, 10.0),
        (2, "seq_unit_100x30", 100, 30, SpectrumSpec::UnitCircle, 1.0),
        (3, "seq_decay_300x60", 300, 60, SpectrumSpec::Disc { r_min: 0.001, r_max: 0.7 }, 300.0),
    ] {
        let s = root.split(tag).next_u64();
        let o = make_oracle(n, &spec, cond, s)?;
        let f = trajectory(o.a.as_ref(), random_start(n, s ^ 0x5eed).as_ref(), m)?;
        let files = vec![put(name, &f.into_matrix())?, put(&format!("{name}_A"), &o.a)?];
        entries.push(FixtureEntry {
            name: name.into(),
            files,
            n,
            m,
            seed: s,
            spectrum: Some(spec),
            conditioning: Some(cond),
            note: Some("sequential trajectory f_1..f_{m+1}; _A is the generating operator".into()),
        });
    }

    let s = root.split(4).next_u64();
    let o = make_oracle(50, &SpectrumSpec::Disc { r_min: 0.5, r_max: 1.0 }, 5.0, s)?;
    let mut st = Stream::new(s).split(77);
    let x: CMat = Mat::from_fn(50, 12, |_, _| creal(st.normal()));
    let y = &o.a * &x;
    entries.push(FixtureEntry {
        name: "pair_random_50x12".into(),
        files: vec![put("pair_random_50x12_X", &x)?, put("pair_random_50x12_Y", &y)?, put("pair_random_50x12_A", &o.a)?],
        n: 50,
        m: 12,
        seed: s,
        spectrum: Some(SpectrumSpec::Disc { r_min: 0.5, r_max: 1.0 }),
        conditioning: Some(5.0),
        note: Some("Gaussian X, Y = A X".into()),
    });

    let p = suite::singular_backward_pair(4);
    entries.push(FixtureEntry {
        name: "fb_singular".into(),
        files: vec![put("fb_singular_X", &p.x)?, put("fb_singular_Y", &p.y)?],
        n: 4,
        m: 2,
        seed: 0,
        spectrum: None,
        conditioning: None,
        note: Some("Y is rank one, so the backward quotient is singular".into()),
    });

    let w: CMat = Mat::from_fn(200, 1, |i, _| creal(10f64.powf(6.0 * i as f64 / 199.0)));
    entries.push(FixtureEntry {
        name: "weights_graded_200".into(),
        files: vec![put("weights_graded_200", &w)?],
        n: 200,
        m: 0,
        seed: 0,
        spectrum: None,
        conditioning: None,
        note: Some("diagonal weights 10^0..10^6 for seq_disc_200x40".into()),
    });

    let manifest = FixtureManifest {
        format: "DMM1".into(),
        fixtures: entries,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_json() + "\n").map_err(io(&path))
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DmdError + '_ {
    move |source| DmdError::Io {
        path: path.display().to_string(),
        source,
    }
}
