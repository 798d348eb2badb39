fn main() {
    // Placeholder until the coefficient pipeline lands; criterion groups are
    // registered here once tcl::exact_coefficients exists.
}
