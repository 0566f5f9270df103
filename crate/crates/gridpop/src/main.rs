fn main() {
    // A panic is a broken internal invariant: exit 2 rather than the default
    // panic code so scripts can tell it apart from input errors (exit 1).
    let code = std::panic::catch_unwind(|| gridpop::cli::run_from(std::env::args_os()))
        .unwrap_or(2);
    std::process::exit(code);
}
