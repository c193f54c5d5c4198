pub mod arrangement;
pub mod exactmath;
pub mod formulas;
pub mod models;
pub mod sheaf;
pub mod stratspace;
pub mod torusquot;
