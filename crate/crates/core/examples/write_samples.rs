//! Writes the sample instances and policies under `data/`.

use std::fs;

use mtcode::engine::PrefixTree;
use mtcode::model::random::{random_instance, DistortionKind, RandomSpec};
use mtcode::model::Instance;
use mtcode::policies::{Decoder, EncoderPolicy, PolicyFile};

fn identity_policy(inst: &Instance) -> PolicyFile {
    let encoders = (0..inst.n())
        .map(|i| {
            let tree = PrefixTree::build(inst, i);
            let outputs: Vec<Vec<usize>> = tree.stages.iter().map(|s| s.iter().map(|n| n.xs.last().unwrap() % inst.z_size(i)).collect()).collect();
            EncoderPolicy::General(tree.general_encoder(&outputs))
        })
        .collect();
    PolicyFile { encoders, receiver: None, decoder: Decoder::Tau }
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data".into());
    fs::create_dir_all(&dir)?;
    let finite = random_instance(&RandomSpec { distortion: DistortionKind::Random(2), ..RandomSpec::uniform(2, 2, 2, 2, 2) }, 1);
    let perfect = random_instance(&RandomSpec { distortion: DistortionKind::Random(2), ..RandomSpec::perfect(2, 2, 2, 2) }, 2);
    for (name, inst) in [("finite_memory", &finite), ("noiseless", &perfect)] {
        fs::write(format!("{dir}/{name}.instance.json"), inst.to_json() + "\n")?;
        fs::write(format!("{dir}/{name}.policy.json"), identity_policy(inst).to_json() + "\n")?;
    }
    Ok(())
}
