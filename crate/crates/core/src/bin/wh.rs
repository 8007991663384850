use std::io;

fn main() {
    let code = weakhilbert::cli::dispatch(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    std::process::exit(code);
}
