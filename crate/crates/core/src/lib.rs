//! Verification toolkit for the gluing construction of compact torsion-free
//! G2-manifolds from Eguchi–Hanson resolutions.

pub mod eguchi_hanson;
pub mod fibre;
pub mod forms;
pub mod g2;
pub mod glue;
pub mod hk4;
pub mod linalg;
pub mod scalar;
pub mod topology;
