use clap::Parser;

fn main() {
    let args = afrelay_cli::Args::parse();
    if let Err(e) = afrelay_cli::run(args) {
        eprintln!("afrelay: {e}");
        std::process::exit(e.exit_code());
    }
}
