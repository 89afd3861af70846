//! File formats: stream files, error CSVs, SVG plots and JSON reports.

pub mod csv;
pub mod report;
pub mod stream_file;
pub mod svg;

pub use csv::{export_errors_csv, write_errors_csv, ERROR_CSV_HEADER};
pub use report::{Report, REPORT_SCHEMA_VERSION};
pub use stream_file::{parse_stream, read_stream, write_stream, write_stream_to};
pub use svg::{render_plot, render_svg, PlotKind, PlotLabels, PlotSelection, Trace};
