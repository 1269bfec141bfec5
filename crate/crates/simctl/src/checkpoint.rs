//! Policy checkpoints.
//!
//! A checkpoint is one line of JSON describing every network, a newline,
//! then the parameters of each network in order as little-endian `f64`.
//! Parameters are laid out layer by layer (trunk, value head, advantage
//! head), weights row-major before biases.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use dasim_core::da1::GroupPolicies;
use dasim_core::harness::TrainedPolicies;
use dasim_core::learn::BdqNetwork;
use dasim_core::scenario::GroupPolicySharing;
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "dasim-policy";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    /// `group:<id>` for group policies, `pdrl` for the benchmark policy.
    pub name: String,
    /// Input width followed by the hidden widths.
    pub widths: Vec<usize>,
    pub branches: usize,
    pub actions: usize,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    /// `shared` or `per-group`; absent without group policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharing: Option<GroupPolicySharing>,
    pub nets: Vec<NetShape>,
}

fn shape(name: String, net: &BdqNetwork) -> NetShape {
    NetShape {
        name,
        widths: net.widths(),
        branches: net.num_branches,
        actions: net.actions_per_branch,
        params: net.param_count(),
    }
}

pub fn write_policies<W: Write>(out: &mut W, policies: &TrainedPolicies) -> Result<()> {
    let mut nets: Vec<(String, &BdqNetwork)> = Vec::new();
    if let Some(g) = &policies.group {
        nets.extend(g.nets.iter().map(|(k, n)| (format!("group:{k}"), n)));
    }
    if let Some(n) = &policies.pdrl {
        nets.push(("pdrl".into(), n));
    }
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        sharing: policies.group.as_ref().map(|g| g.sharing),
        nets: nets.iter().map(|(name, n)| shape(name.clone(), n)).collect(),
    };
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n")?;
    for (_, n) in &nets {
        for v in n.params() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_policies<R: Read>(input: R) -> Result<TrainedPolicies> {
    let mut input = BufReader::new(input);
    let mut line = String::new();
    input.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end()).context("checkpoint header")?;
    ensure!(header.format == FORMAT, "not a policy checkpoint (format `{}`)", header.format);
    ensure!(header.version == VERSION, "unsupported checkpoint version {}", header.version);
    let mut group = BTreeMap::new();
    let mut pdrl = None;
    for s in &header.nets {
        ensure!(s.widths.len() >= 2, "network `{}` needs an input and a hidden width", s.name);
        let mut net = BdqNetwork::zeros(&s.widths, s.branches, s.actions);
        ensure!(net.param_count() == s.params, "network `{}` declares {} parameters for its shape", s.name, s.params);
        let mut raw = vec![0u8; s.params * 8];
        input.read_exact(&mut raw).with_context(|| format!("parameters of `{}`", s.name))?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        net.set_params(&values)?;
        if s.name == "pdrl" {
            pdrl = Some(net);
        } else if let Some(k) = s.name.strip_prefix("group:") {
            group.insert(k.parse::<u32>().with_context(|| format!("group key in `{}`", s.name))?, net);
        } else {
            bail!("unknown network name `{}`", s.name);
        }
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    ensure!(rest.is_empty(), "{} trailing bytes after the last network", rest.len());
    let group = match (header.sharing, group.is_empty()) {
        (Some(sharing), _) => Some(GroupPolicies { sharing, nets: group }),
        (None, true) => None,
        (None, false) => bail!("group networks present without a sharing mode"),
    };
    Ok(TrainedPolicies { group, pdrl })
}

pub fn save(path: &Path, policies: &TrainedPolicies) -> Result<()> {
    let mut f = std::io::BufWriter::new(
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    write_policies(&mut f, policies)?;
    f.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<TrainedPolicies> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_policies(f).with_context(|| format!("reading {}", path.display()))
}
