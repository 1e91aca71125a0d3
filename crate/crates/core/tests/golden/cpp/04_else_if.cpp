/* Classify a number
   by its sign. */
int sign(int v) {
  if (v > 0) {
    return 1;
  } else if (v < 0) {
    return -1;
  } else {
    return 0;
  }
}

int clampTo(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }
