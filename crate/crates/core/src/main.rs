fn main() {
    std::process::exit(charge_diagram::cli::execute(std::env::args_os()));
}
