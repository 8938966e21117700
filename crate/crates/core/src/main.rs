fn main() {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = stinespring_lab::cli::main_with_args(std::env::args_os(), &mut out, &mut std::io::stderr());
    std::process::exit(code);
}
