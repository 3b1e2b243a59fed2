#include <stdio.h>

double a[32];
double b[32];
double c[32];

void smooth(double w) {
  int i;
  for (i = 1; i < 31; i++)
    b[i] = w * a[i] + (1.0 - w) * b[i];
}

int main(void) {
  int i;

  for (i = 0; i < 32; i++)
    a[i] = (double)(i % 5);
  for (i = 0; i < 32; i++)
    b[i] = 1.0;

  smooth(0.5);

  for (i = 0; i < 32; i++)
    c[i] = a[i] + b[i];

  smooth(0.25);

  for (i = 0; i < 32; i++)
    a[i] = c[i] * b[i];

  printf("%f %f %f\n", a[5], b[5], c[5]);
  return 0;
}
