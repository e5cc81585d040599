//! One function per subcommand, each returning CSV text, metrics and checks.

pub mod analytic;
pub mod localtime;
pub mod paths;
pub mod restricted;

use slt_core::marks::{sample_unit_path, scale_mark, MarkKernel, MarkPath};
use slt_core::sampling::RngStream;

/// Substream tag for mark randomness drawn alongside a streamed path.
const MARK_TAG: u64 = 0x6d61_726b;

/// Marks for individual jumps: one shared unit path when the kernel is
/// deterministic, a fresh draw per jump otherwise.
struct MarkSource<'a> {
    kernel: &'a MarkKernel,
    fixed: Option<MarkPath>,
    rng: RngStream,
}

impl<'a> MarkSource<'a> {
    fn new(kernel: &'a MarkKernel, stream: &RngStream) -> Self {
        let mut rng = stream.substream(MARK_TAG);
        let fixed = kernel
            .is_deterministic()
            .then(|| sample_unit_path(kernel, &mut rng));
        Self { kernel, fixed, rng }
    }

    fn mark(&mut self, dx: f64) -> MarkPath {
        match &self.fixed {
            Some(unit) => scale_mark(unit, dx),
            None => scale_mark(&sample_unit_path(self.kernel, &mut self.rng), dx),
        }
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}
