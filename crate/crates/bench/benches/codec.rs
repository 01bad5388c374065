use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use xstune_bench::sample_photo;
use xstune_core::codec::{self, prepare};
use xstune_core::metrics::ms_ssim;
use xstune_core::weights::default_table;

fn bench_codec(c: &mut Criterion) {
    let img = sample_photo();
    let table = default_table();
    let pixels = (img.width() * img.height()) as u64;
    let prepared = prepare(&img).unwrap();

    let mut group = c.benchmark_group("codec");
    group.throughput(Throughput::Elements(pixels));
    group.bench_function("prepare", |b| b.iter(|| prepare(black_box(&img)).unwrap()));
    for bpp in [1.0, 3.0, 5.0] {
        group.bench_with_input(BenchmarkId::new("encode_prepared", bpp), &bpp, |b, &bpp| {
            b.iter(|| prepared.encode(black_box(&table), bpp).unwrap())
        });
        let bs = prepared.encode(&table, bpp).unwrap();
        group.bench_with_input(BenchmarkId::new("decode", bpp), &bs, |b, bs| {
            b.iter(|| codec::decode(black_box(bs)).unwrap())
        });
    }
    group.finish();

    let decoded = codec::decode(&prepared.encode(&table, 1.0).unwrap()).unwrap();
    c.bench_function("ms_ssim_256", |b| b.iter(|| ms_ssim(black_box(&img), black_box(&decoded)).unwrap()));
}

criterion_group!(benches, bench_codec);
criterion_main!(benches);
