use clap::Parser;

fn main() {
    // die quietly when the output pipe closes, like other unix tools
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = loopwalk::cli::Cli::parse();
    std::process::exit(loopwalk::cli::run(cli));
}
