use clap::Parser;

fn main() {
    let cli = tb_control::cli::Cli::parse();
    std::process::exit(tb_control::cli::run(&cli));
}
