//! Seeded instance grids and their on-disk form.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ensure_dir, ExperimentConfig};
use crate::channel::Instance;
use crate::error::{Error, Result};

/// Cartesian product of network sizes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub aps: Vec<usize>,
    pub ues: Vec<usize>,
    pub antennas: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub aps: usize,
    pub ues: usize,
    pub antennas: usize,
}

impl Cell {
    pub fn label(&self) -> String {
        format!("K{}_N{}_M{}", self.aps, self.ues, self.antennas)
    }
}

impl Grid {
    pub fn is_empty(&self) -> bool {
        self.aps.is_empty() || self.ues.is_empty() || self.antennas.is_empty()
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &antennas in &self.antennas {
            for &ues in &self.ues {
                for &aps in &self.aps {
                    out.push(Cell { aps, ues, antennas });
                }
            }
        }
        out
    }
}

/// Distinct cells of a list of grids, in first-seen order.
pub(crate) fn union_cells(grids: &[Grid]) -> Vec<Cell> {
    let mut out: Vec<Cell> = Vec::new();
    for c in grids.iter().flat_map(Grid::cells) {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Test => 1 << 32,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    /// `K{K}_N{N}_M{M}_{index}`; also the file stem.
    pub id: String,
    pub instance: Instance,
}

/// All instances of one split. Each cell has its own generator stream, so a
/// cell's instances do not depend on the other cells of the grid.
pub fn generate_split(config: &ExperimentConfig, split: Split) -> Vec<LabeledInstance> {
    let (grids, per_cell) = match split {
        Split::Train => (&config.train_grid, config.train_per_cell),
        Split::Test => (&config.test_grid, config.test_per_cell),
    };
    union_cells(grids)
        .par_iter()
        .map(|cell| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(split.stream() + cell_stream(cell));
            let system = crate::channel::SystemConfig {
                antennas: cell.antennas,
                ..config.system.with_size(cell.aps, cell.ues)
            };
            (0..per_cell)
                .map(|i| LabeledInstance {
                    id: format!("{}_{i:05}", cell.label()),
                    instance: Instance::sample(&system, &mut rng),
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect()
}

fn cell_stream(cell: &Cell) -> u64 {
    ((cell.aps as u64) << 20) ^ ((cell.ues as u64) << 8) ^ cell.antennas as u64
}

#[derive(Deserialize)]
struct InstanceFile {
    config_digest: String,
    id: String,
    instance: Instance,
}

/// One JSON file per instance under `dir`.
pub fn write_split(dir: &Path, digest: &str, items: &[LabeledInstance]) -> Result<()> {
    ensure_dir(dir)?;
    items.par_iter().try_for_each(|item| {
        // Instance floats go through the 17-digit writer.
        let text = format!(
            "{{\"config_digest\":{},\"id\":{},\"instance\":{}}}\n",
            serde_json::to_string(digest)?,
            serde_json::to_string(&item.id)?,
            item.instance.to_json()?
        );
        std::fs::write(dir.join(format!("{}.json", item.id)), text)?;
        Ok(())
    })
}

/// Reads every `*.json` instance under `dir`, sorted by id. Returns the
/// digests found alongside the instances.
pub fn load_split(dir: &Path) -> Result<(Vec<LabeledInstance>, Vec<String>)> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Config(format!(
            "no instance files in {}",
            dir.display()
        )));
    }
    let files: Vec<InstanceFile> = paths
        .par_iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        })
        .collect::<Result<_>>()?;
    let mut digests: Vec<String> = files.iter().map(|f| f.config_digest.clone()).collect();
    digests.sort();
    digests.dedup();
    let items = files
        .into_iter()
        .map(|f| LabeledInstance {
            id: f.id,
            instance: f.instance,
        })
        .collect();
    Ok((items, digests))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            train_grid: vec![Grid {
                aps: vec![3, 4],
                ues: vec![2],
                antennas: vec![1, 2],
            }],
            test_grid: vec![Grid {
                aps: vec![5],
                ues: vec![3],
                antennas: vec![1],
            }],
            train_per_cell: 3,
            test_per_cell: 2,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn count_is_cells_times_instances() {
        let cfg = small();
        assert_eq!(generate_split(&cfg, Split::Train).len(), 4 * 3);
        assert_eq!(generate_split(&cfg, Split::Test).len(), 2);
    }

    #[test]
    fn same_seed_same_instances() {
        let cfg = small();
        assert_eq!(
            generate_split(&cfg, Split::Train),
            generate_split(&cfg, Split::Train)
        );
        let other = ExperimentConfig { seed: 1, ..small() };
        assert_ne!(
            generate_split(&cfg, Split::Train),
            generate_split(&other, Split::Train)
        );
    }

    #[test]
    fn cell_draws_do_not_depend_on_grid() {
        let cfg = small();
        let narrow = ExperimentConfig {
            train_grid: vec![Grid {
                aps: vec![4],
                ues: vec![2],
                antennas: vec![2],
            }],
            ..small()
        };
        let full = generate_split(&cfg, Split::Train);
        let part = generate_split(&narrow, Split::Train);
        for item in &part {
            assert!(full.contains(item));
        }
    }

    #[test]
    fn files_roundtrip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small();
        let items = generate_split(&cfg, Split::Train);
        write_split(dir.path(), "d1", &items).unwrap();
        let (mut back, digests) = load_split(dir.path()).unwrap();
        let mut items = items;
        items.sort_by(|a, b| a.id.cmp(&b.id));
        back.sort_by(|a, b| a.id.cmp(&b.id));
        assert_eq!(back, items);
        assert_eq!(digests, vec!["d1".to_string()]);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 12);
    }

    #[test]
    fn default_test_grid_has_unseen_cells() {
        let cfg = ExperimentConfig::default();
        let train = union_cells(&cfg.train_grid);
        assert!(union_cells(&cfg.test_grid)
            .iter()
            .any(|c| !train.contains(c)));
    }
}
