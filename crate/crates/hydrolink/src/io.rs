//! Output files: atomic writes, lossless float text, CSV tables and agent
//! parameter files.

use std::io::Write;
use std::path::Path;

use hydrolink_core::ddpg::{codec, Agent, ActorPolicy};

use crate::config::EvalNetwork;
use crate::error::{Error, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// In-memory CSV table with a mandatory header row.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
    width: usize,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Table { writer, width: header.len() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let record = csv::ByteRecord::from_iter(fields);
        if record.len() != self.width {
            return Err(Error::Core(hydrolink_core::Error::ShapeMismatch { expected: self.width, got: record.len() }));
        }
        self.writer.write_byte_record(&record)?;
        Ok(())
    }

    pub fn into_bytes(self) -> Result<Vec<u8>> {
        self.writer.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, &self.into_bytes()?)
    }
}

/// Saved networks, in file order.
pub const AGENT_NETWORKS: [&str; 4] = ["actor", "critic", "actor_target", "critic_target"];

pub fn save_agent(path: &Path, agent: &Agent) -> Result<()> {
    let bytes = codec::encode(&agent.scale, &[&agent.actor, &agent.critic, &agent.actor_target, &agent.critic_target]);
    write_atomic(path, &bytes)
}

/// Loads the acting policy from a parameter file.
///
/// Four-network files hold a full agent and `which` picks the actor; a
/// single-network file is taken as the actor itself.
pub fn load_policy(path: &Path, which: EvalNetwork) -> Result<ActorPolicy> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let saved = codec::decode(&bytes)?;
    let index = match (saved.networks.len(), which) {
        (1, _) => 0,
        (4, EvalNetwork::Online) => 0,
        (4, EvalNetwork::Target) => 2,
        (n, _) => return Err(Error::config(format!("{}: expected 1 or 4 networks, found {n}", path.display()))),
    };
    let actor = saved.networks.into_iter().nth(index).expect("index checked");
    Ok(ActorPolicy { actor, scale: saved.scale })
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrolink_core::ddpg::{Hyperparams, ObsScale};
    use hydrolink_core::SimRng;
    use rand::SeedableRng;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, 5e-324, f64::MAX, 0.0, -0.0] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"first").unwrap();
        write_atomic(&p, b"second").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"second");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn table_checks_width() {
        let mut t = Table::new(&["a", "b"]).unwrap();
        t.row(["1", "2"]).unwrap();
        assert!(t.row(["1"]).is_err());
        assert_eq!(t.into_bytes().unwrap(), b"a,b\n1,2\n");
    }

    #[test]
    fn agent_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("agent.bin");
        let hp = Hyperparams { hidden: vec![5], ..Hyperparams::default() };
        let mut rng = SimRng::seed_from_u64(17);
        let mut agent = Agent::new(&hp, ObsScale::default(), &mut rng).unwrap();
        agent.actor_target.layers_mut()[0].biases[0] = 0.5;
        save_agent(&p, &agent).unwrap();
        assert_eq!(load_policy(&p, EvalNetwork::Online).unwrap(), agent.policy());
        assert_eq!(load_policy(&p, EvalNetwork::Target).unwrap(), agent.target_policy());
    }
}
