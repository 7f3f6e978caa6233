//! Leakage figure tables as CSV plus gnuplot-compatible plot stubs.

use qpc_core::analytics::{leakage_vs_group_size, leakage_vs_length};

/// Fixed string length used for the leakage-versus-group-size table; it
/// is divisible by every group size up to 15, which keeps the grid
/// dense.
pub const GROUP_SIZE_TABLE_N: u64 = 360_360;
pub const GROUP_SIZE_TABLE_M_MAX: u32 = 20;
pub const LENGTH_TABLE_N_MAX: u64 = 60;

/// Leakage as a function of group size at fixed n.
pub fn fig1_csv() -> String {
    let mut out = String::from("m,leakage_bits\n");
    for (m, bits) in leakage_vs_group_size(GROUP_SIZE_TABLE_N, GROUP_SIZE_TABLE_M_MAX) {
        out.push_str(&format!("{m},{bits}\n"));
    }
    out
}

/// Leakage as a function of string length for group sizes 1, 2, and 13;
/// blank cells where the group size does not divide n.
pub fn fig2_csv() -> String {
    let mut out = String::from("n,leakage_m1,leakage_m2,leakage_m13\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in leakage_vs_length(LENGTH_TABLE_N_MAX) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.n,
            cell(row.m1),
            cell(row.m2),
            cell(row.m13)
        ));
    }
    out
}

pub fn fig1_gnuplot(csv_name: &str) -> String {
    format!(
        "# Average leaked bits as a function of the group size m (n = {GROUP_SIZE_TABLE_N}).\n\
         set datafile separator ','\n\
         set key left top\n\
         set xlabel 'group size m'\n\
         set ylabel 'average information leaked I (bits)'\n\
         plot '{csv_name}' every ::1 using 1:2 with linespoints title 'I(n={GROUP_SIZE_TABLE_N}, m)'\n"
    )
}

pub fn fig2_gnuplot(csv_name: &str) -> String {
    format!(
        "# Average leaked bits as a function of the compared length n.\n\
         # Reference curves for the predecessor protocol's loose bounds are\n\
         # not emitted; see the documented anchor constants instead.\n\
         set datafile separator ','\n\
         set key left top\n\
         set xlabel 'string length n'\n\
         set ylabel 'average information leaked I (bits)'\n\
         plot '{csv_name}' every ::1 using 1:2 with linespoints title 'm=1', \\\n\
              '{csv_name}' every ::1 using 1:3 with linespoints title 'm=2', \\\n\
              '{csv_name}' every ::1 using 1:4 with linespoints title 'm=13'\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_rows_strictly_increase() {
        let csv = fig1_csv();
        let values: Vec<f64> = csv
            .lines()
            .skip(1)
            .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 20);
        assert!(values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fig2_blanks_follow_divisibility() {
        let csv = fig2_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,leakage_m1,leakage_m2,leakage_m13");
        // n = 6: m=1 and m=2 populated, m=13 blank.
        let n6: Vec<&str> = lines[6].split(',').collect();
        assert_eq!(n6[0], "6");
        assert_eq!(n6[1], "1.875");
        assert_eq!(n6[2], "2.53125");
        assert_eq!(n6[3], "");
        // n = 7: only m=1.
        let n7: Vec<&str> = lines[7].split(',').collect();
        assert!(!n7[1].is_empty() && n7[2].is_empty() && n7[3].is_empty());
        // n = 26: m=13 populated.
        let n26: Vec<&str> = lines[26].split(',').collect();
        assert!(!n26[3].is_empty());
    }

    #[test]
    fn gnuplot_stubs_reference_the_csv() {
        assert!(fig1_gnuplot("fig1.csv").contains("'fig1.csv'"));
        assert!(fig2_gnuplot("fig2.csv").contains("'fig2.csv'"));
    }
}
