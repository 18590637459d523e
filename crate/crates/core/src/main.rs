use clap::Parser;

fn main() {
    // die quietly when stdout is closed early (e.g. piping into `head`)
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = bcrec::cli::Cli::parse();
    if let Err(e) = bcrec::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
