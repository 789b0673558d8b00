//! Drive a full run from a JSON document, as the command-line tool does.

use voi::config::RunConfig;
use voi::run::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join("voi-example");
    let config = RunConfig::from_json(&format!(
        r#"{{"S": 200, "R": 500, "psa_size": 2000, "Q": 20, "bootstrap": 20, "output_dir": {:?}}}"#,
        out
    ))?;
    let table = run(&config)?;
    for r in &table.rows {
        println!(
            "study {} {:>3}: EVSI^IM {:.0} ± {:.0}",
            r.study,
            r.method.label(),
            r.evsi_im.value,
            r.evsi_im.std_error
        );
    }
    println!("outputs in {} (config {})", out.display(), &config.hash()[..12]);
    Ok(())
}
