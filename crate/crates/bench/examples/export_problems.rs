//! Regenerates `problems/*.json` from the fixture builders and the golden
//! initial-state prompts under `golden/`.

use std::path::Path;

use tamp_bench::{fixtures, golden_prompt_name, render_prompt, ProblemFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let problems = root.join("problems");
    let golden = root.join("golden");
    std::fs::create_dir_all(&problems)?;
    std::fs::create_dir_all(&golden)?;
    for p in fixtures::all() {
        let path = problems.join(format!("{}.json", p.name));
        std::fs::write(&path, ProblemFile::from_instance(&p).to_json() + "\n")?;
        println!("wrote {}", path.display());
        let path = golden.join(golden_prompt_name(&p, &p.s0));
        std::fs::write(&path, render_prompt(&p, &p.s0)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
