use std::process::ExitCode;

use idriftnet_cli::{parse_args, run};

fn main() -> ExitCode {
    let cli = match parse_args(std::env::args_os()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = std::panic::catch_unwind(move || run(cli, &mut std::io::stdout()));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            if e.exit_code() == 3 {
                eprintln!("diagnostic: {e:?}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
        Err(_) => {
            eprintln!(
                "internal error: idriftnet {} panicked; this is a bug",
                env!("CARGO_PKG_VERSION")
            );
            ExitCode::from(3)
        }
    }
}
