//! Python bindings: hashed embeddings, cosine, model I/O, hierarchical
//! classification and the synthetic corpus, plus the CLI entry point.

use codeclass::classifier::{self, MlpModel};
use codeclass::corpus::{self, CorpusSpec};
use codeclass::embedding::{self, EmbeddingProvider, EmbeddingVector, HashedNgramProvider};
use codeclass::pscode::{embed_ps_taxonomy, HierarchicalClassifier, Prediction, PsIndex};
use codeclass::taxonomy::{IndustryTaxonomy, ProductServiceTaxonomy};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

create_exception!(codeclass_py, CodeclassError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    CodeclassError::new_err(e.to_string())
}

/// L2-normalized hashed n-gram vector for `text`.
#[pyfunction]
#[pyo3(signature = (text, dim = 1024, seed = 7))]
fn hashed_embed(text: &str, dim: usize, seed: u64) -> Vec<f32> {
    embedding::hashed_ngram_embed(text, dim, seed).into_values()
}

/// Cosine similarity; 0.0 when either side is the zero vector.
#[pyfunction]
fn cosine(a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    embedding::cosine_similarity(&EmbeddingVector::new(a), &EmbeddingVector::new(b)).map_err(err)
}

#[pyclass(name = "HashedProvider", frozen)]
struct PyHashedProvider {
    inner: HashedNgramProvider,
}

#[pymethods]
impl PyHashedProvider {
    #[new]
    #[pyo3(signature = (dim = 1024, seed = 7))]
    fn new(dim: usize, seed: u64) -> Self {
        Self {
            inner: HashedNgramProvider::new(dim, seed),
        }
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn embed(&self, text: &str) -> PyResult<Vec<f32>> {
        self.inner.embed(text).map(EmbeddingVector::into_values).map_err(err)
    }

    fn embed_batch(&self, texts: Vec<String>) -> PyResult<Vec<Vec<f32>>> {
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let out = self.inner.embed_batch(&refs).map_err(err)?;
        Ok(out.into_iter().map(EmbeddingVector::into_values).collect())
    }
}

/// A trained industry classifier.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    inner: MlpModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        classifier::load_model(path).map(|inner| Self { inner }).map_err(err)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        classifier::save_model(&self.inner, path).map_err(err)
    }

    #[getter]
    fn class_labels(&self) -> Vec<String> {
        self.inner.class_labels.clone()
    }

    #[getter]
    fn fingerprint(&self) -> String {
        self.inner.provider_fingerprint.clone()
    }

    /// Class probabilities in `class_labels` order.
    fn probabilities(&self, vector: Vec<f32>) -> PyResult<Vec<f64>> {
        classifier::forward(&self.inner, &EmbeddingVector::new(vector)).map_err(err)
    }

    /// `(label, probability)` pairs, most probable first.
    #[pyo3(signature = (vector, k = 3))]
    fn predict_topk(&self, vector: Vec<f32>, k: usize) -> PyResult<Vec<(String, f64)>> {
        let top = classifier::predict_topk(&self.inner, &EmbeddingVector::new(vector), k).map_err(err)?;
        Ok(top.ranked.into_iter().map(|r| (r.id, r.prob)).collect())
    }
}

/// Industry model plus product/service index behind one hashed provider.
#[pyclass(name = "Classifier", frozen)]
struct PyClassifier {
    model: MlpModel,
    index: PsIndex,
    provider: HashedNgramProvider,
    k: usize,
    top_n: usize,
}

fn prediction_dict<'py>(py: Python<'py>, p: Prediction) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("company_id", p.company_id)?;
    let inds: Vec<(String, f64)> = p.industries.ranked.into_iter().map(|r| (r.id, r.prob)).collect();
    d.set_item("industries", inds)?;
    let products = PyList::empty(py);
    for ps in p.products {
        let e = PyDict::new(py);
        e.set_item("industry_id", ps.industry_id)?;
        let codes: Vec<(String, f64)> = ps.ranked.into_iter().map(|c| (c.id, c.score)).collect();
        e.set_item("codes", codes)?;
        products.append(e)?;
    }
    d.set_item("products", products)?;
    Ok(d)
}

#[pymethods]
impl PyClassifier {
    #[new]
    #[pyo3(signature = (model_path, industries_csv, products_csv, dim = 1024, seed = 7, k = 3, top_n = 2))]
    fn new(
        model_path: &str,
        industries_csv: &str,
        products_csv: &str,
        dim: usize,
        seed: u64,
        k: usize,
        top_n: usize,
    ) -> PyResult<Self> {
        let model = classifier::load_model(model_path).map_err(err)?;
        let provider = HashedNgramProvider::new(dim, seed);
        model.check_fingerprint(&provider.fingerprint(), true).map_err(err)?;
        let industries = IndustryTaxonomy::load(industries_csv).map_err(err)?;
        let products = ProductServiceTaxonomy::load(products_csv, &industries).map_err(err)?;
        let index = embed_ps_taxonomy(&products, &provider).map_err(err)?;
        Ok(Self {
            model,
            index,
            provider,
            k,
            top_n,
        })
    }

    /// `{"company_id", "industries": [(id, prob)], "products": [{"industry_id", "codes": [(id, score)]}]}`
    fn classify<'py>(&self, py: Python<'py>, company_id: &str, description: &str) -> PyResult<Bound<'py, PyDict>> {
        let hc = HierarchicalClassifier::new(&self.model, &self.index, &self.provider)
            .map_err(err)?
            .with_k(self.k, self.top_n);
        prediction_dict(py, hc.classify(company_id, description).map_err(err)?)
    }
}

/// Write a synthetic corpus (industries, products, mapping, companies).
#[pyfunction]
#[pyo3(signature = (out_dir, n_industries = 12, n_companies = 2000, noise = 0.0, seed = 7))]
fn generate_corpus(out_dir: &str, n_industries: usize, n_companies: usize, noise: f64, seed: u64) -> PyResult<()> {
    let spec = CorpusSpec {
        n_industries,
        n_companies,
        noise,
        seed,
        ..Default::default()
    };
    corpus::generate_corpus(&spec)
        .map_err(err)?
        .write_to_dir(out_dir)
        .map_err(err)
}

/// Run a `codeclass` command line in-process; returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    codeclass::cli::run(std::iter::once("codeclass".to_string()).chain(args))
}

#[pymodule]
fn codeclass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CodeclassError", m.py().get_type::<CodeclassError>())?;
    m.add_function(wrap_pyfunction!(hashed_embed, m)?)?;
    m.add_function(wrap_pyfunction!(cosine, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add_class::<PyHashedProvider>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyClassifier>()?;
    Ok(())
}
