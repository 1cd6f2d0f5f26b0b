use pyo3::prelude::*;

#[pymodule]
fn restrain_lab(_py: Python<'_>, _m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
