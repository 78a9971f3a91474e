fn main() {
    std::process::exit(gvar_spill::cli::main_with_args(std::env::args_os()));
}
