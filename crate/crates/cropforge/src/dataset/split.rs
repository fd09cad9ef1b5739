use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Disjoint train/val/test scene-id lists, a pure function of
/// (ids, counts, seed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitManifest {
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

pub fn build_split(
    scene_ids: &[String],
    counts: (usize, usize, usize),
    seed: u64,
) -> Result<SplitManifest> {
    let (n_train, n_val, n_test) = counts;
    let total = n_train + n_val + n_test;
    if total > scene_ids.len() {
        return Err(Error::Argument(format!(
            "split counts {counts:?} need {total} ids but only {} are available",
            scene_ids.len()
        )));
    }
    let mut ids = scene_ids.to_vec();
    ids.sort();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let train = ids[..n_train].to_vec();
    let val = ids[n_train..n_train + n_val].to_vec();
    let test = ids[n_train + n_val..total].to_vec();
    Ok(SplitManifest {
        train,
        val,
        test,
        seed,
    })
}

impl SplitManifest {
    /// Plain-text form: a `seed=<int>` header, then one `<split>\t<id>` line
    /// per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("seed={}\n", self.seed);
        for (name, ids) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for id in ids.iter() {
                out.push_str(name);
                out.push('\t');
                out.push_str(id);
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty split manifest".into()))?;
        let seed: u64 = header
            .strip_prefix("seed=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format(format!("bad manifest header: {header}")))?;
        let mut manifest = SplitManifest {
            train: Vec::new(),
            val: Vec::new(),
            test: Vec::new(),
            seed,
        };
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (split, id) = line
                .split_once('\t')
                .ok_or_else(|| Error::Format(format!("bad manifest line: {line}")))?;
            match split {
                "train" => manifest.train.push(id.to_string()),
                "val" => manifest.val.push(id.to_string()),
                "test" => manifest.test.push(id.to_string()),
                other => return Err(Error::Format(format!("unknown split name {other}"))),
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
