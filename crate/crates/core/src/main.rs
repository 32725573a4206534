use clap::error::ErrorKind;
use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match geoexpectile::cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let err = geoexpectile::cli::CliError::usage(e.to_string().lines().next().unwrap_or("invalid arguments"));
            eprintln!("{}", err.to_json_line());
            std::process::exit(err.code);
        }
    };
    match geoexpectile::cli::run(cli) {
        Ok(manifest) => {
            for name in &manifest.outputs {
                println!("{}", manifest.output_dir.join(name).display());
            }
        }
        Err(err) => {
            eprintln!("{}", err.to_json_line());
            std::process::exit(err.code);
        }
    }
}
