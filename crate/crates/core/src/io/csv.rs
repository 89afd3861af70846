use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::analysis::ErrorSeries;
use crate::error::{Error, Result};

pub const ERROR_CSV_HEADER: &str =
    "frame_index,t_s,joint,err_x_m,err_y_m,err_z_m,err_pos_m,err_speed_mps";

/// One row per (frame, joint), frames outermost.
pub fn write_errors_csv<W: Write>(errors: &ErrorSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{ERROR_CSV_HEADER}")?;
    for (i, t) in errors.t_s.iter().enumerate() {
        for j in &errors.joints {
            writeln!(
                w,
                "{i},{t},{},{},{},{},{},{}",
                j.joint,
                j.err_x_m[i],
                j.err_y_m[i],
                j.err_z_m[i],
                j.err_pos_m[i],
                j.err_speed_mps[i]
            )?;
        }
    }
    w.flush()
}

pub fn export_errors_csv(errors: &ErrorSeries, path: impl AsRef<Path>) -> Result<()> {
    if errors.is_empty() {
        return Err(Error::EmptySeries);
    }
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_errors_csv(errors, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}
