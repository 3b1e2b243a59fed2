#include <stdio.h>

int main(void) {
  double x[256];
  double y1[256];
  double y2[256];
  double y3[256];
  double s = 0.0;
  int i;

  for (i = 0; i < 256; i++) {
    x[i] = s;
    s = s + 0.5;
  }

  for (i = 0; i < 256; i++)
    y1[i] = 2.0 * x[i];
  for (i = 0; i < 256; i++)
    y2[i] = x[i] + 1.0;
  for (i = 0; i < 256; i++)
    y3[i] = x[i] * x[i];

  for (i = 0; i < 256; i++)
    printf("%g %g %g\n", y1[i], y2[i], y3[i]);
  return 0;
}
