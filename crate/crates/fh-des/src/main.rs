fn main() {
    std::process::exit(fh_des::cli::run(std::env::args_os()));
}
