use std::process::ExitCode;

use clap::Parser;
use fairpia_cli::commands::{run_autofair, run_compare, run_fair, run_gen, Cli, Command, Outcome};

fn main() -> ExitCode {
    fairpia_cli::init_logging();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fair(a) => run_fair(a),
        Command::Autofair(a) => run_autofair(a),
        Command::Compare(a) => run_compare(a),
        Command::Gen(g) => run_gen(g),
        Command::Serve(a) => {
            let rt = tokio::runtime::Runtime::new().expect("failed to start the runtime");
            return match rt.block_on(fairpia_cli::service::serve(&a.host, a.port, a.static_dir.clone())) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            };
        }
    };
    match result {
        Ok(Outcome { stdout, exit_code }) => {
            print!("{stdout}");
            ExitCode::from(exit_code as u8)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
