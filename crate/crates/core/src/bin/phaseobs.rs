use std::process::ExitCode;

use clap::Parser;
use clap::error::ErrorKind;
use phaseobs::cli::{run, CliError, RunConfig};

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError {
                exit: 1,
                code: "usage",
                message: e.kind().to_string(),
                detail: serde_json::Value::String(e.render().to_string()),
            };
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit);
        }
    };
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit)
        }
    }
}
