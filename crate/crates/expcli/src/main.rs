fn main() {
    std::process::exit(morl_exp::cli::main_with_args(std::env::args_os()));
}
