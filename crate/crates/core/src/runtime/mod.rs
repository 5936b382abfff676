//! Test execution: values, test cases, the instrumented interpreter and traces.

mod distance;
mod interp;
mod test_case;
mod trace;
mod value;

pub use distance::{branch_distance, normalize, DistanceError, K};
pub use interp::{execute, execute_valid, DEFAULT_STEP_BUDGET, MAX_CALL_DEPTH};
pub use test_case::{Arg, MalformedTest, Statement, TestCase, TestSuite};
pub use trace::{
    ExceptionDump, ExceptionRecord, ExecutionTrace, InfectionDump, PredDump, PredEval, ReturnDump, TraceDump,
};
pub use value::{arith, compare, negate, Value};
