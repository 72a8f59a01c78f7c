// scratch check
use qkdrate::keyrate::*;
use qkdrate::states::*;

fn main() {
    let t0 = std::time::Instant::now();
    let ss = six_state();
    println!("six-state q=0:   {:?} ({:?})", threshold(&ss, false), t0.elapsed());
    let t0 = std::time::Instant::now();
    println!("six-state opt:   {:?} ({:?})", threshold(&ss, true), t0.elapsed());
    let bb = bb84();
    let t0 = std::time::Instant::now();
    println!("bb84 q=0:        {:?} ({:?})", threshold(&bb, false), t0.elapsed());
    let t0 = std::time::Instant::now();
    println!("bb84 opt:        {:?} ({:?})", threshold(&bb, true), t0.elapsed());
    let t0 = std::time::Instant::now();
    println!("upper six-state: {:?} ({:?})", upper_threshold(&ss), t0.elapsed());
    let t0 = std::time::Instant::now();
    println!("upper bb84:      {:?} ({:?})", upper_threshold(&bb), t0.elapsed());
    let b9 = b92(0.38).unwrap();
    let t0 = std::time::Instant::now();
    println!("b92 q=0 (delta): {:?} ({:?})", threshold(&b9, false), t0.elapsed());
    let t0 = std::time::Instant::now();
    println!("b92 opt (delta): {:?} ({:?})", threshold(&b9, true), t0.elapsed());
}
