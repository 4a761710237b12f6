use macamp::cli_io;

fn main() {
    cli_io::init_threads();
    if let Err(e) = cli_io::run(std::env::args_os()) {
        eprintln!("{}", e.message());
        std::process::exit(e.exit_code());
    }
}
