fn main() {
    std::process::exit(gsp_winding::cli::run(std::env::args_os()));
}
