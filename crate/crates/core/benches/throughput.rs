use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use cbcsti::analysis::{analyze_image, simulate_channel, ChannelModel, Sampling};
use cbcsti::cipher::{Cipher, CipherConfig, Mode, SecretKey, Variant};
use cbcsti::image::synthetic_scene;

#[cfg(feature = "parallel")]
fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let default = rayon::current_num_threads();
    [("single-thread".to_string(), 1), (format!("default-pool-{default}"), default)]
        .into_iter()
        .map(|(label, n)| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            (label, pool)
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn run_in(pool: &(String, rayon::ThreadPool), f: &mut (dyn FnMut() + Send)) {
    pool.1.install(f)
}

#[cfg(not(feature = "parallel"))]
fn pools() -> Vec<(String, ())> {
    vec![("sequential".to_string(), ())]
}

#[cfg(not(feature = "parallel"))]
fn run_in(_: &(String, ()), f: &mut (dyn FnMut() + Send)) {
    f()
}

fn bench(c: &mut Criterion) {
    let key = SecretKey::from_hex("0123456789abcdeffedcba9876543210").unwrap();
    let img = synthetic_scene(512, 512, 3, 1).unwrap();
    let bytes = img.data().len() as u64;

    let mut g = c.benchmark_group("cipher");
    g.throughput(Throughput::Bytes(bytes));
    g.sample_size(10);
    for mode in [Mode::Ofb, Mode::Ctr, Mode::Cbc] {
        let cipher = Cipher::new(&key, &CipherConfig::new(Variant::A, mode)).unwrap();
        let ct = cipher.encrypt_image(&img).unwrap();
        for pool in pools() {
            g.bench_with_input(BenchmarkId::new(format!("encrypt-{mode}"), &pool.0), &pool, |b, p| {
                b.iter(|| run_in(p, &mut || drop(cipher.encrypt_image(&img).unwrap())))
            });
            g.bench_with_input(BenchmarkId::new(format!("decrypt-{mode}"), &pool.0), &pool, |b, p| {
                b.iter(|| run_in(p, &mut || drop(cipher.decrypt_image(&ct).unwrap())))
            });
        }
    }
    g.finish();

    let mut g = c.benchmark_group("analysis");
    g.throughput(Throughput::Bytes(bytes));
    g.sample_size(10);
    let ch = ChannelModel::new(0.01, 1).unwrap();
    for pool in pools() {
        g.bench_with_input(BenchmarkId::new("channel", &pool.0), &pool, |b, p| {
            b.iter(|| run_in(p, &mut || drop(simulate_channel(img.data(), &ch))))
        });
        g.bench_with_input(BenchmarkId::new("stats", &pool.0), &pool, |b, p| {
            b.iter(|| run_in(p, &mut || drop(analyze_image(&img, None, Sampling::All).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
