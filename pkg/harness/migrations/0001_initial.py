from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='BenchResult',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('instance', models.TextField()),
                ('solver', models.CharField(max_length=20)),
                ('outcome', models.CharField(max_length=20)),
                ('elapsed_ms', models.FloatField()),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('max_param', models.IntegerField(blank=True, null=True)),
                ('recorded_at', models.DateTimeField(auto_now_add=True)),
            ],
        ),
    ]
