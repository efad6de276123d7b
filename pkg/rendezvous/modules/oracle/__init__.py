"""Independent LP oracle and KKT certificates for IRLS output."""
