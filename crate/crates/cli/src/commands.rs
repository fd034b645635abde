use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use meshrdh_core::cipher::{encrypt_payload, parse_hex, Nonce};
use meshrdh_core::container::{read_container, write_container};
use meshrdh_core::mesh_io::{load_mesh, parse_mesh, write_mesh};
use meshrdh_core::metrics::{evaluate as evaluate_run, EvalReport};
use meshrdh_core::payload::{self, Capacity, PublicLayout};
use meshrdh_core::pipeline::{prepare as prepare_mesh, random_nonce, Prepared};
use meshrdh_core::quantizer::dequantize;
use meshrdh_core::{Mesh, MeshFormat, Normalization, SecretKey, StegoContainer, MAGIC};

use crate::bench;
use crate::Options;

pub fn model_key(opts: &Options) -> Result<SecretKey> {
    let hex = opts
        .km
        .as_deref()
        .context("model key required: pass --km or set MRDH_KM")?;
    SecretKey::from_hex(hex).context("invalid model key")
}

pub fn data_key(opts: &Options) -> Result<SecretKey> {
    let hex = opts
        .ka
        .as_deref()
        .context("data key required: pass --ka or set MRDH_KA")?;
    SecretKey::from_hex(hex).context("invalid data key")
}

pub fn nonce(opts: &Options) -> Result<Nonce> {
    if opts.nonce == "auto" {
        Ok(random_nonce())
    } else {
        parse_hex(&opts.nonce).context("invalid nonce")
    }
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    load_mesh(path).with_context(|| format!("reading {}", path.display()))
}

/// With `--normalize`, scale the mesh into (-1, 1).
pub fn normalize_input(opts: &Options, mesh: Mesh) -> (Mesh, Normalization) {
    if opts.normalize {
        mesh.normalize()
    } else {
        (mesh, Normalization::IDENTITY)
    }
}

pub fn load_input(opts: &Options, path: &Path) -> Result<(Mesh, Normalization)> {
    Ok(normalize_input(opts, read_mesh(path)?))
}

pub fn prepare_input(opts: &Options, mesh: &Mesh) -> Result<Prepared> {
    prepare_mesh(mesh, opts.precision, opts.strategy).context(
        "quantization failed; coordinates must lie in (-1, 1), try --normalize or a smaller --p",
    )
}

fn load_container(path: &Path) -> Result<StegoContainer> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    parse_container(path, &bytes)
}

fn parse_container(path: &Path, bytes: &[u8]) -> Result<StegoContainer> {
    if !bytes.starts_with(&MAGIC) {
        bail!("{} is not a meshrdh container", path.display());
    }
    read_container(bytes).with_context(|| format!("corrupt container {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn write_recovered(path: &Path, mesh: &Mesh) -> Result<()> {
    let format = MeshFormat::from_path(path).unwrap_or(MeshFormat::Off);
    write(path, &write_mesh(mesh, format))
}

/// Model-key recovery back to float coordinates in the original units.
pub fn recovered_mesh(c: &StegoContainer, km: &SecretKey) -> Result<Mesh> {
    let q = payload::recover(c, km)?;
    Ok(c.normalization.undo(&dequantize(&q)))
}

fn print_capacity(cap: &Capacity) {
    println!("l_p: {} bits", cap.embed_bits);
    println!("l_ai: {} bits", cap.aux_bits);
    println!("ER: {:.4} bpv", cap.er());
    println!("max payload: {} bytes", cap.max_payload_bytes());
}

pub fn prepare(opts: &Options, path: &Path, csv: Option<&Path>) -> Result<()> {
    let (mesh, _) = load_input(opts, path)?;
    let prepared = prepare_input(opts, &mesh)?;
    let partition = &prepared.partition;
    println!("vertices: {}", mesh.vertex_count());
    println!("faces: {}", mesh.face_count());
    println!("strategy: {}", prepared.strategy);
    println!(
        "precision: {} ({} bits)",
        opts.precision,
        prepared.quantized.bits()
    );
    println!(
        "embedding vertices: {} ({:.2}%)",
        partition.embed_set().len(),
        100.0 * partition.utilization()
    );
    println!("weakly predicted: {}", partition.weakly_predicted());
    print_capacity(&prepared.capacity());
    if let Some(csv) = csv {
        let cap = prepared.capacity();
        let row = bench::Row {
            mesh: bench::mesh_name(path),
            n: mesh.vertex_count(),
            m: mesh.face_count(),
            strategy: prepared.strategy,
            precision: opts.precision,
            embed_count: partition.embed_set().len(),
            utilization: partition.utilization(),
            embed_bits: cap.embed_bits,
            aux_bits: cap.aux_bits,
            er: cap.er(),
            snr: None,
            hausdorff: None,
        };
        bench::write_csv(Some(csv), &[row])?;
    }
    Ok(())
}

pub fn encrypt(opts: &Options, path: &Path, out: &Path) -> Result<()> {
    let (mesh, norm) = load_input(opts, path)?;
    let prepared = prepare_input(opts, &mesh)?;
    let c = prepared.encrypt(&model_key(opts)?, &nonce(opts)?, norm);
    write(out, &write_container(&c))?;
    print_capacity(&prepared.capacity());
    Ok(())
}

pub fn embed(opts: &Options, input: &Path, payload_path: &Path, out: &Path) -> Result<()> {
    let data =
        fs::read(payload_path).with_context(|| format!("reading {}", payload_path.display()))?;
    let ka = data_key(opts)?;
    let bytes = fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let container = if bytes.starts_with(&MAGIC) {
        parse_container(input, &bytes)?
    } else {
        let format = MeshFormat::from_path(input).with_context(|| {
            format!(
                "{} is neither a container nor an .off/.obj mesh",
                input.display()
            )
        })?;
        let mesh =
            parse_mesh(&bytes, format).with_context(|| format!("reading {}", input.display()))?;
        let (mesh, norm) = normalize_input(opts, mesh);
        prepare_input(opts, &mesh)?.encrypt(&model_key(opts)?, &nonce(opts)?, norm)
    };
    let capacity = PublicLayout::from_container(&container)?.capacity(&container.aux);
    let marked = payload::embed(&container, &encrypt_payload(&data, &ka, &container.nonce))?;
    write(out, &write_container(&marked))?;
    print_capacity(&capacity);
    println!("embedded: {} bytes", data.len());
    Ok(())
}

pub fn extract(opts: &Options, path: &Path, out: &Path) -> Result<()> {
    let c = load_container(path)?;
    let data = payload::extract(&c, &data_key(opts)?)?;
    write(out, &data)?;
    println!("extracted: {} bytes", data.len());
    Ok(())
}

pub fn recover(opts: &Options, path: &Path, out: &Path) -> Result<()> {
    let c = load_container(path)?;
    let mesh = recovered_mesh(&c, &model_key(opts)?)?;
    write_recovered(out, &mesh)?;
    println!("recovered: {} vertices", mesh.vertex_count());
    Ok(())
}

pub fn both(opts: &Options, path: &Path, payload_out: &Path, mesh_out: &Path) -> Result<()> {
    let c = load_container(path)?;
    let (ka, km) = (data_key(opts)?, model_key(opts)?);
    let data = payload::extract(&c, &ka)?;
    let mesh = recovered_mesh(&c, &km)?;
    write(payload_out, &data)?;
    write_recovered(mesh_out, &mesh)?;
    println!("extracted: {} bytes", data.len());
    println!("recovered: {} vertices", mesh.vertex_count());
    Ok(())
}

fn print_report(r: &EvalReport) {
    println!("vertices: {}", r.vertex_count);
    println!("faces: {}", r.face_count);
    println!("strategy: {}", r.strategy);
    println!("precision: {}", r.precision);
    println!(
        "embedding vertices: {} ({:.2}%)",
        r.embed_count,
        100.0 * r.utilization
    );
    println!("l_p: {} bits", r.embed_bits);
    println!("l_ai: {} bits", r.aux_bits);
    println!("ER: {:.4} bpv", r.er_bpv);
    println!("payload: {} bits", r.payload_bits);
    println!("SNR: {} dB", r.snr);
    println!("Hausdorff: {:e}", r.hausdorff);
}

pub fn evaluate(opts: &Options, original: &Path, path: &Path, csv: Option<&Path>) -> Result<()> {
    let mesh = read_mesh(original)?;
    let c = load_container(path)?;
    let recovered = recovered_mesh(&c, &model_key(opts)?)?;
    let report = evaluate_run(&mesh, &c, &recovered)?;
    print_report(&report);
    if let Some(csv) = csv {
        bench::write_csv(
            Some(csv),
            &[bench::Row::from_report(bench::mesh_name(original), &report)],
        )?;
    }
    Ok(())
}
